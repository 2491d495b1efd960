#include "chase/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "chase/errors.hpp"

namespace chase
{

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows * cols)
    {
        throw ShapeError("DenseMatrix: data length does not match rows x cols");
    }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t nr = rows.size();
    const std::size_t nc = nr == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(nr, nc);
    std::size_t i = 0;
    for (const auto& row : rows)
    {
        if (row.size() != nc)
        {
            throw ShapeError("DenseMatrix::from_rows: ragged rows");
        }
        std::size_t j = 0;
        for (double v : row)
        {
            m(i, j++) = v;
        }
        ++i;
    }
    return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n)
{
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
    {
        m(i, i) = 1.0;
    }
    return m;
}

DenseMatrix DenseMatrix::submatrix(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const
{
    if (i0 + nr > rows_ || j0 + nc > cols_)
    {
        throw ShapeError("DenseMatrix::submatrix: range out of bounds");
    }
    return to_matrix(view().block(i0, j0, nr, nc));
}

DenseMatrix DenseMatrix::transposed() const
{
    DenseMatrix t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
    {
        for (std::size_t i = 0; i < rows_; ++i)
        {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

bool DenseMatrix::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix to_matrix(ConstMatrixView v)
{
    DenseMatrix m(v.rows, v.cols);
    copy_into(v, m.view());
    return m;
}

void copy_into(ConstMatrixView src, MatrixView dst)
{
    if (src.rows != dst.rows || src.cols != dst.cols)
    {
        throw ShapeError("copy_into: shape mismatch");
    }
    for (std::size_t j = 0; j < src.cols; ++j)
    {
        std::copy_n(src.col(j), src.rows, dst.col(j));
    }
}

} // namespace chase
