#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chase/dense_matrix.hpp"
#include "chase/dist_hemm.hpp"
#include "chase/errors.hpp"
#include "chase/filter.hpp"
#include "chase/grid.hpp"

namespace chase::solver
{

struct SolverConfig
{
    std::size_t n = 0;
    std::size_t nev = 0;
    std::size_t nex = 0;
    double tol = 1e-10;
    std::size_t deg = 20;
    std::size_t deg_max = 36;
    std::size_t max_iters = 100;
    std::uint64_t seed = 1337;
    std::size_t lanczos_steps = 25;
    std::size_t lanczos_runs = 4;
    /// Solve for the largest eigenpairs by working on -A.
    bool largest = false;
    /// Stop after exactly one subspace iteration (weak-scaling protocol).
    bool one_iteration = false;

    std::size_t n_e() const noexcept { return nev + nex; }

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Throws InvalidArgument on inconsistent fields.
void validate(const SolverConfig& cfg);

struct SpectralBounds
{
    double mu_1 = 0.0;
    double mu_ne = 0.0;
    double b_sup = 0.0;

    double center() const noexcept { return 0.5 * (b_sup + mu_ne); }
    double half_width() const noexcept { return 0.5 * (b_sup - mu_ne); }
};

/// [mu_ne, b_sup], widened when the two nearly coincide (flat spectrum).
filter::FilterInterval guarded_interval(double mu_ne, double b_sup);

struct LanczosResult
{
    SpectralBounds bounds;
    /// Gaussian n x n_e start block.
    DenseMatrix start;
    std::size_t restarts = 0;
    /// Runs that ended early on an exhausted Krylov space.
    std::size_t truncated_runs = 0;
};

/// Spectral bounds from `lanczos_runs` short Lanczos runs with full
/// reorthogonalization. b_sup = max Ritz value + |beta_last| per run, mu_1 the
/// smallest Ritz value, mu_ne the (nev+nex)/n quantile of the Ritz density.
LanczosResult lanczos_bounds(const hemm::DistributedMatrix& a, const SolverConfig& cfg);

struct RitzPairs
{
    std::vector<double> values; // ascending
    DenseMatrix vectors;
};

/// G = Q^T (A Q), symmetrized and diagonalized; returns Q W and the eigenvalues.
RitzPairs rayleigh_ritz(const hemm::DistributedMatrix& a, const DenseMatrix& q);

/// ||A v_a - lambda_a v_a|| / max(|lambda_a|, 1).
std::vector<double> compute_residuals(const hemm::DistributedMatrix& a, const DenseMatrix& v,
                                      std::span<const double> ritz);

/// Basis [Y V]: the first `locked` columns are converged.
struct SubspaceState
{
    DenseMatrix basis;
    std::size_t locked = 0;
    /// Per basis column; locked entries keep the value they locked with.
    std::vector<double> ritz;
    std::vector<double> residuals;
    /// Per active column.
    std::vector<std::size_t> degrees;
    std::size_t iteration = 0;
    std::uint64_t matvecs = 0;

    std::size_t width() const noexcept { return basis.cols(); }
    std::size_t active() const noexcept { return basis.cols() - locked; }
};

/// Locks the longest run of active columns, in ascending Ritz order, whose
/// residuals are all <= tol. Locked columns move to the front of the active
/// block; the rest keep their relative order. Returns the number locked.
std::size_t deflate_and_lock(SubspaceState& state, double tol);

struct PhaseSeconds
{
    double lanczos = 0.0;
    double filter = 0.0;
    double qr = 0.0;
    double rr = 0.0;
    double resid = 0.0;
    double all = 0.0;
};

struct IterationTrace
{
    std::size_t iteration = 0;
    std::size_t locked = 0;
    std::size_t active = 0;
    std::size_t min_degree = 0;
    std::size_t max_degree = 0;
    std::uint64_t matvecs = 0;
    double max_residual = 0.0;
    /// max |[Y V]^T [Y V] - I| right after QR.
    double orthogonality = 0.0;
    /// Largest change of a locked column through QR (sign-adjusted).
    double locked_drift = 0.0;
};

struct RunReport
{
    std::size_t iterations = 0;
    std::uint64_t matvecs = 0;
    /// Growth of the HEMM counter inside filter sweeps only.
    std::uint64_t hemm_filter_matvecs = 0;
    std::uint64_t filter_redistributions = 0;
    std::size_t locked = 0;
    bool converged = false;
    PhaseSeconds seconds;
    std::vector<IterationTrace> trace;
    grid::CommStats comm;
    SpectralBounds initial_bounds;
    std::size_t lanczos_restarts = 0;
    /// Largest per-rank element count held live: A block, V and W pieces and
    /// the two replicated n x n_e buffers.
    std::uint64_t peak_rank_elements = 0;
};

struct SolveResult
{
    std::vector<double> values; // ascending
    DenseMatrix vectors;
    std::vector<double> residuals;
    RunReport report;
};

/// Raised when max_iters runs out; carries the pairs locked so far.
class PartialResultError : public ConvergenceError
{
  public:
    PartialResultError(const std::string& what, SolveResult partial)
        : ConvergenceError(what), partial_(std::move(partial))
    {
    }
    const SolveResult& partial() const noexcept { return partial_; }

  private:
    SolveResult partial_;
};

/// Lowest nev eigenpairs of the distributed matrix. `cfg.largest` must be
/// false here; use the DenseMatrix overload for the other end.
/// `initial` optionally replaces the random start block (n x n_e).
SolveResult solve(hemm::DistributedMatrix& a, const SolverConfig& cfg, const DenseMatrix* initial = nullptr);

/// Distributes `a` over `grid` first. Honors `cfg.largest`.
SolveResult solve(const DenseMatrix& a, const grid::Grid& grid, const SolverConfig& cfg,
                  const DenseMatrix* initial = nullptr);

} // namespace chase::solver
