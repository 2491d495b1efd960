#include "chase/matgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "chase/errors.hpp"
#include "chase/linalg.hpp"
#include "chase/random.hpp"

namespace chase::matgen
{

Family parse_family(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "uniform" || s == "uni")
    {
        return Family::Uniform;
    }
    if (s == "geometric" || s == "geo")
    {
        return Family::Geometric;
    }
    if (s == "1-2-1" || s == "121" || s == "onetwoone")
    {
        return Family::OneTwoOne;
    }
    if (s == "wilkinson" || s == "wilk")
    {
        return Family::Wilkinson;
    }
    throw InvalidArgument("unknown matrix family '" + std::string(name) + "'");
}

std::string to_string(Family f)
{
    switch (f)
    {
    case Family::Uniform:
        return "uniform";
    case Family::Geometric:
        return "geometric";
    case Family::OneTwoOne:
        return "1-2-1";
    case Family::Wilkinson:
        return "wilkinson";
    }
    return "?";
}

void validate(const SpectrumSpec& spec)
{
    if (spec.n == 0)
    {
        throw InvalidArgument("matrix order must be positive");
    }
    switch (spec.family)
    {
    case Family::Uniform:
    case Family::Geometric:
        if (spec.n < 2)
        {
            throw InvalidArgument(to_string(spec.family) + ": order must be at least 2");
        }
        if (!(spec.d_max > 0.0) || !std::isfinite(spec.d_max))
        {
            throw InvalidArgument(to_string(spec.family) + ": d_max must be positive");
        }
        if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0))
        {
            throw InvalidArgument(to_string(spec.family) + ": epsilon must lie in (0, 1)");
        }
        break;
    case Family::Wilkinson:
        if (spec.n % 2 == 0)
        {
            throw InvalidArgument("wilkinson: order must be odd");
        }
        break;
    case Family::OneTwoOne:
        break;
    }
}

std::vector<double> prescribed_eigenvalues(const SpectrumSpec& spec)
{
    validate(spec);
    const std::size_t n = spec.n;
    std::vector<double> lambda;
    switch (spec.family)
    {
    case Family::Uniform:
        lambda.resize(n);
        for (std::size_t k = 1; k <= n; ++k)
        {
            lambda[k - 1] =
                spec.d_max * (spec.epsilon + double(k - 1) * (1.0 - spec.epsilon) / double(n - 1));
        }
        break;
    case Family::Geometric:
        lambda.resize(n);
        for (std::size_t k = 1; k <= n; ++k)
        {
            lambda[k - 1] = spec.d_max * std::pow(spec.epsilon, double(n - k) / double(n - 1));
        }
        break;
    case Family::OneTwoOne:
        lambda.resize(n);
        for (std::size_t k = 1; k <= n; ++k)
        {
            lambda[k - 1] = 2.0 - 2.0 * std::cos(std::numbers::pi * double(k) / double(n + 1));
        }
        break;
    case Family::Wilkinson:
        break;
    }
    return lambda;
}

DenseMatrix build_tridiagonal(const SpectrumSpec& spec)
{
    validate(spec);
    const std::size_t n = spec.n;
    DenseMatrix a(n, n);
    if (spec.family == Family::OneTwoOne)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            a(i, i) = 2.0;
        }
    }
    else if (spec.family == Family::Wilkinson)
    {
        // diagonal |i - m|: (m, m-1, ..., 1, 0, 1, ..., m)
        const std::size_t m = (n - 1) / 2;
        for (std::size_t i = 0; i < n; ++i)
        {
            a(i, i) = i < m ? double(m - i) : double(i - m);
        }
    }
    else
    {
        throw InvalidArgument("build_tridiagonal: " + to_string(spec.family) + " is not a tridiagonal family");
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
        a(i + 1, i) = 1.0;
        a(i, i + 1) = 1.0;
    }
    return a;
}

DenseMatrix conjugate_spectrum(std::span<const double> eigenvalues, std::uint64_t seed)
{
    const std::size_t n = eigenvalues.size();
    constexpr int kMaxRetries = 3;
    DenseMatrix q;
    for (int attempt = 0;; ++attempt)
    {
        GaussianStream rng(seed, static_cast<std::uint64_t>(attempt));
        auto qr = core::householder_qr_checked(rng.matrix(n, n));
        if (qr.deficient.empty())
        {
            q = std::move(qr.q);
            break;
        }
        if (attempt == kMaxRetries)
        {
            throw RankError("densify: Gaussian matrix rank deficient after retries", qr.deficient);
        }
    }

    DenseMatrix dq = q;
    for (std::size_t j = 0; j < n; ++j)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            dq(i, j) *= eigenvalues[i];
        }
    }
    DenseMatrix a = core::multiply(q, dq, core::Op::Trans);
    for (std::size_t j = 0; j < n; ++j)
    {
        for (std::size_t i = j + 1; i < n; ++i)
        {
            const double s = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = s;
            a(j, i) = s;
        }
    }
    return a;
}

DenseMatrix densify(const SpectrumSpec& spec)
{
    if (spec.family != Family::Uniform && spec.family != Family::Geometric)
    {
        throw InvalidArgument("densify: " + to_string(spec.family) + " has no prescribed dense spectrum");
    }
    const auto lambda = prescribed_eigenvalues(spec);
    return conjugate_spectrum(lambda, spec.seed);
}

DenseMatrix generate(const SpectrumSpec& spec)
{
    switch (spec.family)
    {
    case Family::OneTwoOne:
    case Family::Wilkinson:
        return build_tridiagonal(spec);
    default:
        return densify(spec);
    }
}

} // namespace chase::matgen
