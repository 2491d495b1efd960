#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "chase/dense_matrix.hpp"
#include "chase/random.hpp"

namespace chase::testing
{

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m)
{
    return Eigen::Map<const Eigen::MatrixXd>(m.data(), Eigen::Index(m.rows()), Eigen::Index(m.cols()));
}

/// Ascending eigenvalues of a symmetric matrix from Eigen's solver.
inline std::vector<double> reference_eigenvalues(const DenseMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a), Eigen::EigenvaluesOnly);
    const auto& v = es.eigenvalues();
    return {v.data(), v.data() + v.size()};
}

inline DenseMatrix random_symmetric(std::size_t n, std::uint64_t seed)
{
    auto m = GaussianStream(seed, 77).matrix(n, n);
    DenseMatrix s(n, n);
    for (std::size_t j = 0; j < n; ++j)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            s(i, j) = 0.5 * (m(i, j) + m(j, i));
        }
    }
    return s;
}

inline double rel_frobenius(const DenseMatrix& a, const DenseMatrix& b)
{
    return (to_eigen(a) - to_eigen(b)).norm() / std::max(to_eigen(b).norm(), 1e-300);
}

inline DenseMatrix diagonal(const std::vector<double>& d)
{
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
    {
        m(i, i) = d[i];
    }
    return m;
}

/// Scaled Chebyshev polynomial C_m(t) by the plain three-term recurrence.
inline double chebyshev(std::size_t m, double t)
{
    double prev = 1.0;
    double cur = t;
    if (m == 0)
    {
        return prev;
    }
    for (std::size_t k = 1; k < m; ++k)
    {
        const double next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

} // namespace chase::testing
