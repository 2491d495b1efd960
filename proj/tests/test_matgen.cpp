#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "chase/errors.hpp"
#include "chase/matgen.hpp"
#include "oracle.hpp"

using namespace chase;
using matgen::Family;
using matgen::SpectrumSpec;

namespace
{

SpectrumSpec spec(Family f, std::size_t n, double dmax = 1.0, double eps = 0.1, std::uint64_t seed = 0)
{
    SpectrumSpec s;
    s.family = f;
    s.n = n;
    s.d_max = dmax;
    s.epsilon = eps;
    s.seed = seed;
    return s;
}

void expect_near_all(const std::vector<double>& a, const std::vector<double>& b, double tol)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
    }
}

} // namespace

TEST(Spectrum, UniformThree)
{
    expect_near_all(matgen::prescribed_eigenvalues(spec(Family::Uniform, 3, 1.0, 0.1)), {0.1, 0.55, 1.0}, 1e-15);
}

TEST(Spectrum, GeometricThree)
{
    expect_near_all(matgen::prescribed_eigenvalues(spec(Family::Geometric, 3, 1.0, 0.25)), {0.25, 0.5, 1.0}, 1e-15);
}

TEST(Spectrum, OneTwoOneThree)
{
    expect_near_all(matgen::prescribed_eigenvalues(spec(Family::OneTwoOne, 3)),
                    {2 - std::sqrt(2.0), 2.0, 2 + std::sqrt(2.0)}, 1e-15);
}

TEST(Spectrum, WilkinsonHasNoClosedForm)
{
    EXPECT_TRUE(matgen::prescribed_eigenvalues(spec(Family::Wilkinson, 5)).empty());
}

TEST(Spectrum, InvalidSpecsRejected)
{
    EXPECT_THROW(matgen::validate(spec(Family::Wilkinson, 300)), InvalidArgument);
    EXPECT_THROW(matgen::validate(spec(Family::Geometric, 10, 1.0, 1.0)), InvalidArgument);
    EXPECT_THROW(matgen::validate(spec(Family::Geometric, 10, 1.0, 0.0)), InvalidArgument);
    EXPECT_THROW(matgen::validate(spec(Family::Uniform, 10, -1.0, 0.5)), InvalidArgument);
    EXPECT_THROW(matgen::validate(spec(Family::Uniform, 1)), InvalidArgument);
    EXPECT_NO_THROW(matgen::validate(spec(Family::Wilkinson, 301)));
}

TEST(Spectrum, FamilyNames)
{
    EXPECT_EQ(matgen::parse_family("1-2-1"), Family::OneTwoOne);
    EXPECT_EQ(matgen::parse_family("wilkinson"), Family::Wilkinson);
    EXPECT_EQ(matgen::parse_family("geometric"), Family::Geometric);
    EXPECT_EQ(matgen::parse_family("uniform"), Family::Uniform);
    EXPECT_THROW(matgen::parse_family("banana"), InvalidArgument);
    for (auto f : {Family::Uniform, Family::Geometric, Family::OneTwoOne, Family::Wilkinson})
    {
        EXPECT_EQ(matgen::parse_family(matgen::to_string(f)), f);
    }
}

TEST(Tridiagonal, OneTwoOnePattern)
{
    EXPECT_EQ(matgen::build_tridiagonal(spec(Family::OneTwoOne, 3)),
              DenseMatrix::from_rows({{2, 1, 0}, {1, 2, 1}, {0, 1, 2}}));
}

TEST(Tridiagonal, WilkinsonPattern)
{
    EXPECT_EQ(matgen::build_tridiagonal(spec(Family::Wilkinson, 3)),
              DenseMatrix::from_rows({{1, 1, 0}, {1, 0, 1}, {0, 1, 1}}));
    const auto w7 = matgen::build_tridiagonal(spec(Family::Wilkinson, 7));
    const double diag[7] = {3, 2, 1, 0, 1, 2, 3};
    for (std::size_t i = 0; i < 7; ++i)
    {
        EXPECT_EQ(w7(i, i), diag[i]);
    }
}

TEST(Tridiagonal, WilkinsonThreeEigenvalues)
{
    const auto ev = chase::testing::reference_eigenvalues(matgen::build_tridiagonal(spec(Family::Wilkinson, 3)));
    expect_near_all(ev, {-1.0, 1.0, 2.0}, 1e-14);
}

TEST(Tridiagonal, WrongFamilyRejected)
{
    EXPECT_THROW(matgen::build_tridiagonal(spec(Family::Uniform, 4)), InvalidArgument);
    EXPECT_THROW(matgen::densify(spec(Family::OneTwoOne, 4)), InvalidArgument);
}

TEST(Tridiagonal, OneTwoOneMatchesClosedForm)
{
    const auto s = spec(Family::OneTwoOne, 64);
    expect_near_all(chase::testing::reference_eigenvalues(matgen::build_tridiagonal(s)),
                    matgen::prescribed_eigenvalues(s), 1e-13);
}

TEST(Tridiagonal, OneTwoOneConditionGrowsWithOrder)
{
    double previous = 0.0;
    for (std::size_t n : {101u, 201u, 401u})
    {
        const auto ev = matgen::prescribed_eigenvalues(spec(Family::OneTwoOne, n));
        const double kappa = ev.back() / ev.front();
        EXPECT_GT(kappa, previous);
        previous = kappa;
    }
}

TEST(Densify, SpectralFidelity)
{
    for (std::size_t n : {64u, 128u, 300u})
    {
        for (auto f : {Family::Uniform, Family::Geometric})
        {
            const auto s = spec(f, n, 2.0, 0.2, 42 + n);
            const auto a = matgen::densify(s);
            expect_near_all(chase::testing::reference_eigenvalues(a), matgen::prescribed_eigenvalues(s), 1e-10);
        }
    }
}

TEST(Densify, ExactlySymmetric)
{
    const auto a = matgen::densify(spec(Family::Uniform, 50, 1.0, 0.1, 3));
    for (std::size_t j = 0; j < 50; ++j)
    {
        for (std::size_t i = 0; i < 50; ++i)
        {
            ASSERT_EQ(a(i, j), a(j, i));
        }
    }
}

TEST(Densify, SameSeedSameBits)
{
    const auto s = spec(Family::Uniform, 40, 1.0, 0.1, 7);
    EXPECT_EQ(matgen::densify(s), matgen::densify(s));
    auto other = s;
    other.seed = 8;
    EXPECT_NE(matgen::densify(s), matgen::densify(other));
}

TEST(Densify, IdentitySpectrumGivesIdentity)
{
    const std::vector<double> ones(30, 1.0);
    const auto a = matgen::conjugate_spectrum(ones, 5);
    for (std::size_t j = 0; j < 30; ++j)
    {
        for (std::size_t i = 0; i < 30; ++i)
        {
            EXPECT_NEAR(a(i, j), i == j ? 1.0 : 0.0, 1e-14);
        }
    }
}

TEST(Generate, DispatchesByFamily)
{
    EXPECT_EQ(matgen::generate(spec(Family::OneTwoOne, 5)), matgen::build_tridiagonal(spec(Family::OneTwoOne, 5)));
    const auto u = spec(Family::Uniform, 20, 1.0, 0.1, 1);
    EXPECT_EQ(matgen::generate(u), matgen::densify(u));
}
