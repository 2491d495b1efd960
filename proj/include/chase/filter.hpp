#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chase/dense_matrix.hpp"
#include "chase/dist_hemm.hpp"

namespace chase::filter
{

/// Damped interval [lower, upper]: lower is the upper edge of the wanted part
/// of the spectrum, upper the spectral upper bound.
struct FilterInterval
{
    double lower = 0.0;
    double upper = 0.0;

    double center() const noexcept { return 0.5 * (upper + lower); }
    double half_width() const noexcept { return 0.5 * (upper - lower); }
};

/// Throws InvalidArgument unless upper > lower (both finite).
void validate(const FilterInterval& interval);

struct SweepStats
{
    /// Sum of per-column degrees.
    std::uint64_t matvecs = 0;
    /// Layout conversions observed during the alternating sweep (expected 0).
    std::uint64_t redistributions = 0;
    /// Growth of the HEMM instrumentation matvec counter over the sweep.
    std::uint64_t hemm_matvecs = 0;
};

/// Applies the damped Chebyshev filter in place on distributed operands.
///
/// Column a receives p_a(A) x_a with p_a(t) = C_{m_a}((t - c)/e) / C_{m_a}((lambda_1 - c)/e),
/// evaluated by the three-term recurrence with forward and backward HEMMs
/// alternating between `v` (V-layout, holds X on entry) and `w` (W-layout).
/// Degrees must be ascending; a column finishing at an even step ends in `v`,
/// at an odd step in `w`. The shift A - cI is applied for the sweep and removed
/// afterwards.
SweepStats filter_sweep(hemm::DistributedMatrix& a, hemm::DistributedOperand& v, hemm::DistributedOperand& w,
                        const FilterInterval& interval, std::span<const std::size_t> degrees, double lambda_1);

struct FilterResult
{
    DenseMatrix filtered;
    SweepStats stats;
};

/// Replicated-in, replicated-out wrapper around filter_sweep: slices X into
/// V-layout, sweeps, then assembles each column from the layout it ended in.
FilterResult chebyshev_filter(hemm::DistributedMatrix& a, const DenseMatrix& x, const FilterInterval& interval,
                              std::span<const std::size_t> degrees, double lambda_1);

/// Per-column degree that brings res_a below tol under the Chebyshev rate
/// rho_a = |t| + sqrt(t^2 - 1), t = (c - ritz_a) / e. Ritz values inside the
/// interval get the cap.
std::vector<std::size_t> optimal_degrees(double tol, std::span<const double> residuals,
                                         std::span<const double> ritz_values, const FilterInterval& interval,
                                         std::size_t cap);

/// Rounds up to even; never exceeds the largest even value <= cap (min 2).
std::size_t make_even(std::size_t degree, std::size_t cap);

} // namespace chase::filter
