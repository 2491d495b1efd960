#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace chase
{

/// Non-owning column-major view with explicit leading dimension.
template <typename T>
struct BasicMatrixView
{
    T* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t ld = 0;

    T& operator()(std::size_t i, std::size_t j) const { return data[i + j * ld]; }
    T* col(std::size_t j) const { return data + j * ld; }

    BasicMatrixView block(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const
    {
        return {data + i0 + j0 * ld, nr, nc, ld};
    }
    BasicMatrixView columns(std::size_t j0, std::size_t nc) const { return block(0, j0, rows, nc); }

    operator BasicMatrixView<const T>() const { return {data, rows, cols, ld}; }
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Column-major dense matrix of doubles; leading dimension equals rows.
class DenseMatrix
{
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    /// Row-wise literal, convenient in tests: DenseMatrix::from_rows({{1, 2}, {3, 4}}).
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    MatrixView view() noexcept { return {data_.data(), rows_, cols_, rows_}; }
    ConstMatrixView view() const noexcept { return {data_.data(), rows_, cols_, rows_}; }
    MatrixView columns(std::size_t j0, std::size_t nc) { return view().columns(j0, nc); }
    ConstMatrixView columns(std::size_t j0, std::size_t nc) const { return view().columns(j0, nc); }

    /// Deep copy of a sub-block.
    DenseMatrix submatrix(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const;
    DenseMatrix transposed() const;

    bool all_finite() const noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix to_matrix(ConstMatrixView v);
void copy_into(ConstMatrixView src, MatrixView dst);

} // namespace chase
