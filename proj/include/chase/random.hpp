#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "chase/dense_matrix.hpp"

namespace chase
{

/// Seeded standard-normal stream: std::mt19937_64 (bit-exact across
/// standard libraries) feeding a hand-written Box-Muller transform, since
/// std::normal_distribution is implementation-defined.
class GaussianStream
{
  public:
    explicit GaussianStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(seed ^ (stream * 0x9E3779B97F4A7C15ULL))
    {
    }

    /// Uniform on (0, 1].
    double uniform()
    {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double operator()()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    void fill(MatrixView m)
    {
        for (std::size_t j = 0; j < m.cols; ++j)
        {
            for (std::size_t i = 0; i < m.rows; ++i)
            {
                m(i, j) = (*this)();
            }
        }
    }

    DenseMatrix matrix(std::size_t rows, std::size_t cols)
    {
        DenseMatrix m(rows, cols);
        fill(m.view());
        return m;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chase
