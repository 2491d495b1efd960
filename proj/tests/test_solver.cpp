#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "chase/errors.hpp"
#include "chase/linalg.hpp"
#include "chase/matgen.hpp"
#include "chase/solver.hpp"
#include "oracle.hpp"

using namespace chase;
using namespace chase::solver;

namespace
{

SolverConfig config(std::size_t n, std::size_t nev, std::size_t nex)
{
    SolverConfig c;
    c.n = n;
    c.nev = nev;
    c.nex = nex;
    return c;
}

std::vector<double> range(std::size_t n, double first = 1.0)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        v[i] = first + double(i);
    }
    return v;
}

matgen::SpectrumSpec family(matgen::Family f, std::size_t n)
{
    matgen::SpectrumSpec s;
    s.family = f;
    s.n = n;
    s.d_max = 1.0;
    s.epsilon = 0.1;
    s.seed = 9;
    if (f == matgen::Family::Geometric)
    {
        s.epsilon = 1e-3;
    }
    return s;
}

void expect_monotone_locking(const RunReport& r, std::size_t nev)
{
    for (std::size_t i = 1; i < r.trace.size(); ++i)
    {
        EXPECT_GE(r.trace[i].locked, r.trace[i - 1].locked);
    }
    EXPECT_GE(r.locked, nev);
}

} // namespace

TEST(Config, Validation)
{
    EXPECT_NO_THROW(validate(config(10, 2, 1)));
    EXPECT_THROW(validate(config(10, 0, 1)), InvalidArgument);
    EXPECT_THROW(validate(config(10, 2, 0)), InvalidArgument);
    EXPECT_THROW(validate(config(10, 8, 3)), InvalidArgument);
    auto c = config(10, 2, 1);
    c.tol = 0.0;
    EXPECT_THROW(validate(c), InvalidArgument);
    c = config(10, 2, 1);
    c.deg = 0;
    EXPECT_THROW(validate(c), InvalidArgument);
    c = config(10, 2, 1);
    c.max_iters = 0;
    EXPECT_THROW(validate(c), InvalidArgument);
}

TEST(Lanczos, FullKrylovSpaceFindsEnds)
{
    hemm::DistributedMatrix a(chase::testing::diagonal(range(10)), grid::make_grid(10, 1, 1));
    auto c = config(10, 2, 1);
    c.lanczos_steps = 10;
    const auto lr = lanczos_bounds(a, c);
    EXPECT_NEAR(lr.bounds.mu_1, 1.0, 1e-8);
    EXPECT_GE(lr.bounds.b_sup, 10.0 - 1e-9);
    EXPECT_LE(lr.bounds.b_sup, 12.0);
    EXPECT_GE(lr.bounds.mu_ne, lr.bounds.mu_1);
    EXPECT_LT(lr.bounds.mu_ne, lr.bounds.b_sup);
    EXPECT_EQ(lr.start.rows(), 10u);
    EXPECT_EQ(lr.start.cols(), 3u);
}

TEST(Lanczos, UpperBoundIsSafe)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
    {
        const auto m = chase::testing::random_symmetric(80, seed);
        const auto ev = chase::testing::reference_eigenvalues(m);
        hemm::DistributedMatrix a(m, grid::make_grid(80, 2, 2));
        auto c = config(80, 8, 4);
        c.seed = seed;
        const auto lr = lanczos_bounds(a, c);
        EXPECT_GE(lr.bounds.b_sup, ev.back());
        EXPECT_GE(lr.bounds.mu_1, ev.front() - 1e-12);
    }
}

TEST(Lanczos, IdentityDoesNotFail)
{
    hemm::DistributedMatrix a(DenseMatrix::identity(20), grid::make_grid(20, 1, 1));
    const auto lr = lanczos_bounds(a, config(20, 3, 2));
    EXPECT_NEAR(lr.bounds.mu_1, 1.0, 1e-12);
    EXPECT_GE(lr.bounds.b_sup, 1.0);
    EXPECT_GT(lr.truncated_runs, 0u);
}

TEST(Lanczos, Deterministic)
{
    const auto m = chase::testing::random_symmetric(50, 3);
    hemm::DistributedMatrix a(m, grid::make_grid(50, 1, 1));
    const auto x = lanczos_bounds(a, config(50, 5, 3));
    const auto y = lanczos_bounds(a, config(50, 5, 3));
    EXPECT_EQ(x.bounds.mu_1, y.bounds.mu_1);
    EXPECT_EQ(x.bounds.mu_ne, y.bounds.mu_ne);
    EXPECT_EQ(x.bounds.b_sup, y.bounds.b_sup);
    EXPECT_EQ(x.start, y.start);
}

TEST(Interval, WidenedWhenFlat)
{
    const auto iv = guarded_interval(1.0, 1.0);
    EXPECT_GT(iv.upper, iv.lower);
    const auto normal = guarded_interval(0.5, 2.0);
    EXPECT_EQ(normal.lower, 0.5);
    EXPECT_EQ(normal.upper, 2.0);
}

TEST(RayleighRitz, ExactSubspace)
{
    hemm::DistributedMatrix a(chase::testing::diagonal({3.0, 1.0, 2.0, 5.0}), grid::make_grid(4, 2, 2));
    DenseMatrix q(4, 2);
    q(0, 0) = 1.0;
    q(1, 1) = 1.0;
    const auto rr = rayleigh_ritz(a, q);
    EXPECT_NEAR(rr.values[0], 1.0, 1e-15);
    EXPECT_NEAR(rr.values[1], 3.0, 1e-15);
    EXPECT_NEAR(std::abs(rr.vectors(1, 0)), 1.0, 1e-15);
}

TEST(RayleighRitz, ValuesInsideSpectrum)
{
    const auto m = chase::testing::random_symmetric(40, 5);
    const auto ev = chase::testing::reference_eigenvalues(m);
    hemm::DistributedMatrix a(m, grid::make_grid(40, 3, 2));
    const auto q = core::householder_qr(GaussianStream(6).matrix(40, 7));
    const auto rr = rayleigh_ritz(a, q);
    EXPECT_TRUE(std::is_sorted(rr.values.begin(), rr.values.end()));
    for (std::size_t k = 0; k < rr.values.size(); ++k)
    {
        EXPECT_GE(rr.values[k], ev.front() - 1e-12);
        EXPECT_LE(rr.values[k], ev.back() + 1e-12);
        // Cauchy interlacing.
        EXPECT_GE(rr.values[k], ev[k] - 1e-12);
    }
}

TEST(Residuals, Examples)
{
    hemm::DistributedMatrix a(chase::testing::diagonal({3.0, 1.0, 0.5}), grid::make_grid(3, 1, 1));
    DenseMatrix v(3, 2);
    v(0, 0) = 1.0;
    v(0, 1) = 1.0;
    const double ritz[2] = {0.0, 3.0};
    const auto res = compute_residuals(a, v, ritz);
    EXPECT_DOUBLE_EQ(res[0], 3.0);
    EXPECT_EQ(res[1], 0.0);
    // Small eigenvalues are not amplified: 0.5 -> divide by 1.
    DenseMatrix e3(3, 1);
    e3(2, 0) = 1.0;
    const double wrong[1] = {0.25};
    EXPECT_DOUBLE_EQ(compute_residuals(a, e3, wrong)[0], 0.25);
}

TEST(Deflate, StopsAtFirstUnconverged)
{
    SubspaceState st;
    st.basis = DenseMatrix::identity(3);
    st.ritz = {1.0, 2.0, 3.0};
    st.residuals = {1e-12, 1e-3, 1e-12};
    st.degrees = {10, 10, 10};
    EXPECT_EQ(deflate_and_lock(st, 1e-10), 1u);
    EXPECT_EQ(st.locked, 1u);
    EXPECT_EQ(st.degrees.size(), 2u);
    EXPECT_EQ(deflate_and_lock(st, 1e-10), 0u);
}

TEST(Deflate, OrdersByRitzValue)
{
    SubspaceState st;
    st.basis = DenseMatrix::identity(4);
    st.ritz = {2.0, 1.0, 4.0, 3.0};
    st.residuals = {1e-12, 1e-12, 1e-2, 1e-12};
    // Ascending order is 1, 2, 3, 4: the first three converged.
    EXPECT_EQ(deflate_and_lock(st, 1e-10), 3u);
    EXPECT_EQ(st.ritz, (std::vector<double>{1.0, 2.0, 3.0, 4.0}));
    EXPECT_EQ(st.residuals[3], 1e-2);
    EXPECT_EQ(st.basis(1, 0), 1.0);
    EXPECT_EQ(st.basis(0, 1), 1.0);
}

TEST(Deflate, MissingDataRejected)
{
    SubspaceState st;
    st.basis = DenseMatrix::identity(3);
    st.ritz = {1.0};
    EXPECT_THROW(deflate_and_lock(st, 1e-10), ShapeError);
}

TEST(Solve, DiagonalLowestFive)
{
    const auto a = chase::testing::diagonal(range(100));
    const auto res = solve(a, grid::make_grid(100, 2, 2), config(100, 5, 3));
    ASSERT_EQ(res.values.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k)
    {
        EXPECT_NEAR(res.values[k], double(k + 1), 1e-9);
        EXPECT_LE(res.residuals[k], 1e-10);
    }
    EXPECT_TRUE(res.report.converged);
    expect_monotone_locking(res.report, 5);
    EXPECT_EQ(res.report.filter_redistributions, 0u);
}

TEST(Solve, LargestEnd)
{
    const auto a = chase::testing::diagonal(range(60));
    auto c = config(60, 4, 4);
    c.largest = true;
    const auto res = solve(a, grid::make_grid(60, 1, 1), c);
    ASSERT_EQ(res.values.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
    {
        EXPECT_NEAR(res.values[k], 57.0 + double(k), 1e-8);
    }
    hemm::DistributedMatrix d(a, grid::make_grid(60, 1, 1));
    EXPECT_THROW(solve(d, c), InvalidArgument);
}

TEST(Solve, IdentityConvergesImmediately)
{
    const auto res = solve(DenseMatrix::identity(40), grid::make_grid(40, 1, 1), config(40, 4, 2));
    EXPECT_EQ(res.report.iterations, 1u);
    for (double v : res.values)
    {
        EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(Solve, VectorsOrthonormal)
{
    const auto m = chase::testing::random_symmetric(120, 8);
    const auto res = solve(m, grid::make_grid(120, 3, 2), config(120, 10, 6));
    const auto g = core::multiply(res.vectors, res.vectors, core::Op::Trans);
    for (std::size_t j = 0; j < g.cols(); ++j)
    {
        for (std::size_t i = 0; i < g.rows(); ++i)
        {
            EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-12);
        }
    }
}

TEST(Solve, MatchesDenseOracle)
{
    using matgen::Family;
    for (auto f : {Family::Uniform, Family::Geometric, Family::OneTwoOne, Family::Wilkinson})
    {
        for (std::size_t n : {101u, 301u})
        {
            const auto a = matgen::generate(family(f, n));
            const auto ev = chase::testing::reference_eigenvalues(a);
            const auto res = solve(a, grid::make_grid(n, 2, 2), config(n, 12, 6));
            ASSERT_EQ(res.values.size(), 12u);
            for (std::size_t k = 0; k < 12; ++k)
            {
                EXPECT_NEAR(res.values[k], ev[k], 1e-8) << matgen::to_string(f) << " n=" << n << " k=" << k;
                EXPECT_LE(res.residuals[k], 1e-10);
            }
            expect_monotone_locking(res.report, 12);
        }
    }
}

TEST(Solve, GridNeutral)
{
    const auto a = matgen::generate(family(matgen::Family::Uniform, 150));
    const auto base = solve(a, grid::make_grid(150, 1, 1), config(150, 10, 5));
    for (auto [r, c] : {std::pair{2, 2}, {3, 2}, {1, 4}})
    {
        const auto other = solve(a, grid::make_grid(150, r, c), config(150, 10, 5));
        for (std::size_t k = 0; k < 10; ++k)
        {
            EXPECT_NEAR(other.values[k], base.values[k], 1e-9);
        }
    }
}

TEST(Solve, BitwiseDeterministic)
{
    const auto a = chase::testing::random_symmetric(90, 12);
    const auto x = solve(a, grid::make_grid(90, 2, 3), config(90, 6, 4));
    const auto y = solve(a, grid::make_grid(90, 2, 3), config(90, 6, 4));
    EXPECT_EQ(x.values, y.values);
    EXPECT_EQ(x.report.iterations, y.report.iterations);
    EXPECT_EQ(x.report.matvecs, y.report.matvecs);
    EXPECT_EQ(x.vectors, y.vectors);
}

TEST(Solve, OneIterationMatvecs)
{
    const auto a = chase::testing::random_symmetric(80, 13);
    auto c = config(80, 6, 4);
    c.one_iteration = true;
    c.deg = 7;
    const auto res = solve(a, grid::make_grid(80, 2, 2), c);
    EXPECT_EQ(res.report.iterations, 1u);
    EXPECT_EQ(res.report.matvecs, 8u * 10);
    EXPECT_EQ(res.report.hemm_filter_matvecs, res.report.matvecs);
}

TEST(Solve, BudgetExhaustedGivesPartial)
{
    const auto a = matgen::generate(family(matgen::Family::OneTwoOne, 300));
    auto c = config(300, 20, 5);
    c.max_iters = 1;
    c.deg = 2;
    try
    {
        solve(a, grid::make_grid(300, 1, 1), c);
        FAIL() << "expected PartialResultError";
    }
    catch (const PartialResultError& e)
    {
        EXPECT_LT(e.partial().values.size(), 20u);
        EXPECT_EQ(e.partial().report.iterations, 1u);
        EXPECT_FALSE(e.partial().report.converged);
    }
}

TEST(Solve, InitialBlockShapeChecked)
{
    const auto a = chase::testing::diagonal(range(30));
    const DenseMatrix bad(30, 3);
    EXPECT_THROW(solve(a, grid::make_grid(30, 1, 1), config(30, 3, 2), &bad), ShapeError);
}

TEST(Solve, OrderMismatch)
{
    hemm::DistributedMatrix d(DenseMatrix::identity(20), grid::make_grid(20, 1, 1));
    EXPECT_THROW(solve(d, config(21, 2, 2)), ShapeError);
}
