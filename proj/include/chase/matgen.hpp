#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chase/dense_matrix.hpp"

namespace chase::matgen
{

enum class Family
{
    Uniform,
    Geometric,
    OneTwoOne,
    Wilkinson
};

/// Parses "uniform", "geometric", "1-2-1" and "wilkinson" (case-insensitive,
/// short forms "uni", "geo", "121", "wilk" accepted).
Family parse_family(std::string_view name);
std::string to_string(Family f);

struct SpectrumSpec
{
    Family family = Family::Uniform;
    std::size_t n = 0;
    double d_max = 1.0;   // Uniform / Geometric
    double epsilon = 0.1; // Uniform / Geometric, in (0, 1)
    std::uint64_t seed = 0;

    friend bool operator==(const SpectrumSpec&, const SpectrumSpec&) = default;
};

/// Throws InvalidArgument if the spec breaks a family invariant.
void validate(const SpectrumSpec& spec);

/// Closed-form eigenvalues in ascending order. Wilkinson has no closed form
/// and yields an empty vector.
std::vector<double> prescribed_eigenvalues(const SpectrumSpec& spec);

/// Dense (1-2-1) or Wilkinson W+ tridiagonal matrix.
DenseMatrix build_tridiagonal(const SpectrumSpec& spec);

/// A = Q^T D Q for D = diag(prescribed eigenvalues), Q from a Gaussian QR.
DenseMatrix densify(const SpectrumSpec& spec);

/// Conjugates an arbitrary diagonal by the seeded random orthogonal matrix;
/// densify() is this applied to the prescribed eigenvalues.
DenseMatrix conjugate_spectrum(std::span<const double> eigenvalues, std::uint64_t seed);

/// Dispatch on family: tridiagonal families are built directly, the others densified.
DenseMatrix generate(const SpectrumSpec& spec);

} // namespace chase::matgen
