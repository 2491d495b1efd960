#include "chase/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "chase/linalg.hpp"
#include "chase/random.hpp"

namespace chase::solver
{

namespace
{

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kRepairStream = 5000;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
auto timed(double& acc, F&& f)
{
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>)
    {
        f();
        acc += seconds_since(t0);
    }
    else
    {
        auto r = f();
        acc += seconds_since(t0);
        return r;
    }
}

grid::CommStats difference(const grid::CommStats& after, const grid::CommStats& before)
{
    grid::CommStats d;
    d.rank_collective_calls = after.rank_collective_calls - before.rank_collective_calls;
    d.rank_bytes_reduced = after.rank_bytes_reduced - before.rank_bytes_reduced;
    d.device_reduction_calls = after.device_reduction_calls - before.device_reduction_calls;
    d.matvec_count = after.matvec_count - before.matvec_count;
    d.redistribution_count = after.redistribution_count - before.redistribution_count;
    return d;
}

// Reorders columns [first, first + perm.size()) so new column k is old column
// first + perm[k]; `scratch` must hold at least that many columns.
void permute_columns(DenseMatrix& m, std::size_t first, std::span<const std::size_t> perm, MatrixView scratch)
{
    const std::size_t k = perm.size();
    copy_into(m.columns(first, k), scratch.columns(0, k));
    for (std::size_t j = 0; j < k; ++j)
    {
        copy_into(ConstMatrixView(scratch.columns(perm[j], 1)), m.columns(first + j, 1));
    }
}

template <typename T>
void permute_tail(std::vector<T>& v, std::size_t first, std::span<const std::size_t> perm)
{
    std::vector<T> old(v.begin() + first, v.begin() + first + perm.size());
    for (std::size_t j = 0; j < perm.size(); ++j)
    {
        v[first + j] = old[perm[j]];
    }
}

bool is_identity(std::span<const std::size_t> perm)
{
    for (std::size_t j = 0; j < perm.size(); ++j)
    {
        if (perm[j] != j)
        {
            return false;
        }
    }
    return true;
}

double column_residual(std::span<const double> av, std::span<const double> v, double lambda)
{
    double scale = 0.0;
    double ssq = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const double r = std::abs(av[i] - lambda * v[i]);
        if (r == 0.0)
        {
            continue;
        }
        if (scale < r)
        {
            ssq = 1.0 + ssq * (scale / r) * (scale / r);
            scale = r;
        }
        else
        {
            ssq += (r / scale) * (r / scale);
        }
    }
    return scale * std::sqrt(ssq) / std::max(std::abs(lambda), 1.0);
}

std::size_t largest_block(const hemm::DistributedMatrix& a)
{
    std::size_t m = 0;
    for (std::size_t rank = 0; rank < a.topology().ranks(); ++rank)
    {
        m = std::max(m, a.local_elements(rank));
    }
    return m;
}

SolveResult collect(const SubspaceState& st, std::size_t count, RunReport report)
{
    count = std::min(count, st.locked);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return st.ritz[x] < st.ritz[y]; });
    SolveResult r;
    r.vectors = DenseMatrix(st.basis.rows(), count);
    for (std::size_t k = 0; k < count; ++k)
    {
        r.values.push_back(st.ritz[order[k]]);
        r.residuals.push_back(st.residuals[order[k]]);
        copy_into(st.basis.columns(order[k], 1), r.vectors.columns(k, 1));
    }
    r.report = std::move(report);
    return r;
}

} // namespace

void validate(const SolverConfig& cfg)
{
    if (cfg.nev == 0 || cfg.nex == 0)
    {
        throw InvalidArgument("solver: nev and nex must be positive");
    }
    if (cfg.nev + cfg.nex > cfg.n)
    {
        throw InvalidArgument("solver: nev + nex exceeds the matrix order");
    }
    if (!(cfg.tol > 0.0))
    {
        throw InvalidArgument("solver: tol must be positive");
    }
    if (cfg.deg == 0 || cfg.deg_max == 0)
    {
        throw InvalidArgument("solver: degrees must be at least 1");
    }
    if (cfg.lanczos_steps == 0 || cfg.lanczos_runs == 0)
    {
        throw InvalidArgument("solver: Lanczos needs at least one run of one step");
    }
    if (cfg.max_iters == 0)
    {
        throw InvalidArgument("solver: max_iters must be positive");
    }
}

RitzPairs rayleigh_ritz(const hemm::DistributedMatrix& a, const DenseMatrix& q)
{
    if (q.rows() != a.order())
    {
        throw ShapeError("rayleigh_ritz: basis rows do not match the matrix order");
    }
    DenseMatrix aq(q.rows(), q.cols());
    hemm::apply_into(a, q.view(), aq.view());
    DenseMatrix g(q.cols(), q.cols());
    core::gemm(1.0, q.view(), core::Op::Trans, aq.view(), 0.0, g.view());
    auto eig = core::small_symmetric_eig(g);
    RitzPairs out;
    out.values = std::move(eig.values);
    out.vectors = core::multiply(q, eig.vectors);
    return out;
}

std::vector<double> compute_residuals(const hemm::DistributedMatrix& a, const DenseMatrix& v,
                                      std::span<const double> ritz)
{
    if (v.rows() != a.order() || ritz.size() != v.cols())
    {
        throw ShapeError("compute_residuals: shapes do not conform");
    }
    DenseMatrix av(v.rows(), v.cols());
    hemm::apply_into(a, v.view(), av.view());
    std::vector<double> res(v.cols());
    for (std::size_t k = 0; k < v.cols(); ++k)
    {
        res[k] = column_residual(av.col(k), v.col(k), ritz[k]);
    }
    return res;
}

std::size_t deflate_and_lock(SubspaceState& st, double tol)
{
    const std::size_t first = st.locked;
    const std::size_t active = st.active();
    if (st.ritz.size() != st.width() || st.residuals.size() != st.width())
    {
        throw ShapeError("deflate_and_lock: Ritz values or residuals missing");
    }
    std::vector<std::size_t> order(active);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return st.ritz[first + x] < st.ritz[first + y]; });
    std::size_t k = 0;
    while (k < active && st.residuals[first + order[k]] <= tol)
    {
        ++k;
    }
    if (k == 0)
    {
        return 0;
    }

    // Locked columns first (ascending Ritz), the rest in their previous order.
    std::vector<std::size_t> perm(order.begin(), order.begin() + k);
    std::vector<bool> taken(active, false);
    for (std::size_t j : perm)
    {
        taken[j] = true;
    }
    for (std::size_t j = 0; j < active; ++j)
    {
        if (!taken[j])
        {
            perm.push_back(j);
        }
    }
    if (!is_identity(perm))
    {
        DenseMatrix scratch(st.basis.rows(), active);
        permute_columns(st.basis, first, perm, scratch.view());
        permute_tail(st.ritz, first, perm);
        permute_tail(st.residuals, first, perm);
        if (st.degrees.size() == active)
        {
            permute_tail(st.degrees, 0, perm);
        }
    }
    if (st.degrees.size() == active)
    {
        st.degrees.erase(st.degrees.begin(), st.degrees.begin() + k);
    }
    st.locked += k;
    return k;
}

SolveResult solve(hemm::DistributedMatrix& a, const SolverConfig& cfg, const DenseMatrix* initial)
{
    validate(cfg);
    if (cfg.largest)
    {
        throw InvalidArgument("solve: the largest-end option needs the DenseMatrix overload");
    }
    if (a.order() != cfg.n)
    {
        throw ShapeError("solve: matrix order does not match the configuration");
    }
    const auto t_all = Clock::now();
    const std::size_t n = cfg.n;
    const std::size_t ne = cfg.n_e();
    const auto& grid = a.grid();
    const auto stats_before = a.stats();

    RunReport rep;
    auto lz = timed(rep.seconds.lanczos, [&] { return lanczos_bounds(a, cfg); });
    rep.initial_bounds = lz.bounds;
    rep.lanczos_restarts = lz.restarts;

    SubspaceState st;
    if (initial)
    {
        if (initial->rows() != n || initial->cols() != ne)
        {
            throw ShapeError("solve: initial block must be n x (nev + nex)");
        }
        st.basis = *initial;
    }
    else
    {
        st.basis = std::move(lz.start);
    }
    st.ritz.assign(ne, 0.0);
    st.residuals.assign(ne, std::numeric_limits<double>::infinity());
    st.degrees.assign(ne, filter::make_even(cfg.deg, cfg.deg_max));
    DenseMatrix work(n, ne);

    const std::uint64_t replicated = st.basis.size() + work.size();
    const std::uint64_t max_block = largest_block(a);
    auto note_peak = [&](std::uint64_t rank_local) {
        rep.peak_rank_elements = std::max(rep.peak_rank_elements, rank_local + replicated);
    };

    double mu_1 = lz.bounds.mu_1;
    double mu_ne = lz.bounds.mu_ne;
    const double b_sup = lz.bounds.b_sup;
    std::vector<double> scratch_col(n);

    while (st.iteration < cfg.max_iters)
    {
        ++st.iteration;
        IterationTrace tr;
        tr.iteration = st.iteration;
        const std::size_t locked = st.locked;
        const std::size_t active = st.active();
        tr.active = active;
        tr.min_degree = st.degrees.front();
        tr.max_degree = st.degrees.back();

        auto act = st.basis.columns(locked, active);
        auto work_act = work.columns(0, active);

        timed(rep.seconds.filter, [&] {
            const auto interval = guarded_interval(mu_ne, b_sup);
            auto v = hemm::distribute(ConstMatrixView(act), grid, hemm::Layout::V);
            auto w = hemm::make_operand(grid, hemm::Layout::W, active);
            const auto sw = filter::filter_sweep(a, v, w, interval, st.degrees, mu_1);
            std::uint64_t local = 0;
            for (std::size_t rank = 0; rank < grid.topology.ranks(); ++rank)
            {
                local = std::max<std::uint64_t>(
                    local, a.local_elements(rank) + v.local_elements(rank) + w.local_elements(rank));
            }
            note_peak(local);
            hemm::assemble_into(v, grid, act, &a.stats());
            if (std::any_of(st.degrees.begin(), st.degrees.end(), [](std::size_t d) { return d % 2 == 1; }))
            {
                hemm::assemble_into(w, grid, work_act, &a.stats());
                for (std::size_t k = 0; k < active; ++k)
                {
                    if (st.degrees[k] % 2 == 1)
                    {
                        copy_into(ConstMatrixView(work_act.columns(k, 1)), act.columns(k, 1));
                    }
                }
            }
            st.matvecs += sw.matvecs;
            tr.matvecs = sw.matvecs;
            rep.hemm_filter_matvecs += sw.hemm_matvecs;
            rep.filter_redistributions += sw.redistributions;
        });

        timed(rep.seconds.qr, [&] {
            copy_into(st.basis.view(), work.view());
            auto deficient = core::householder_qr_inplace(st.basis.view());
            if (!deficient.empty())
            {
                if (deficient.front() < locked)
                {
                    throw RankError("solve: locked block lost rank in QR", deficient);
                }
                copy_into(work.view(), st.basis.view());
                GaussianStream rng(cfg.seed, kRepairStream + st.iteration);
                for (std::size_t j : deficient)
                {
                    rng.fill(st.basis.columns(j, 1));
                }
                deficient = core::householder_qr_inplace(st.basis.view());
                if (!deficient.empty())
                {
                    throw RankError("solve: QR rank deficient after re-randomization", deficient);
                }
            }
            for (std::size_t j = 0; j < locked; ++j)
            {
                const auto q = st.basis.col(j);
                const auto y = work.col(j);
                const double sign = core::dot(q, y) < 0.0 ? -1.0 : 1.0;
                double drift = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                {
                    drift = std::max(drift, std::abs(q[i] - sign * y[i]));
                }
                tr.locked_drift = std::max(tr.locked_drift, drift);
            }
            tr.orthogonality = core::orthogonality_error(st.basis.view());
        });

        timed(rep.seconds.rr, [&] {
            note_peak(max_block + hemm::apply_into(a, act, work_act));
            DenseMatrix g(active, active);
            core::gemm(1.0, act, core::Op::Trans, work_act, 0.0, g.view());
            const auto eig = core::small_symmetric_eig(g);
            core::gemm(1.0, act, core::Op::NoTrans, eig.vectors.view(), 0.0, work_act);
            copy_into(ConstMatrixView(work_act), act);
            std::copy(eig.values.begin(), eig.values.end(), st.ritz.begin() + locked);
        });

        timed(rep.seconds.resid, [&] {
            note_peak(max_block + hemm::apply_into(a, act, work_act));
            for (std::size_t k = 0; k < active; ++k)
            {
                const double* av = work_act.col(k);
                st.residuals[locked + k] =
                    column_residual({av, n}, {act.col(k), n}, st.ritz[locked + k]);
                tr.max_residual = std::max(tr.max_residual, st.residuals[locked + k]);
            }
        });

        deflate_and_lock(st, cfg.tol);
        tr.locked = st.locked;
        rep.trace.push_back(tr);

        if (st.locked >= cfg.nev || cfg.one_iteration)
        {
            break;
        }

        // Bounds from all current values, then per-column degrees.
        const auto [lo, hi] = std::minmax_element(st.ritz.begin(), st.ritz.end());
        mu_1 = *lo;
        mu_ne = *hi;
        const std::size_t first = st.locked;
        const std::size_t remaining = st.active();
        const auto interval = guarded_interval(mu_ne, b_sup);
        st.degrees = filter::optimal_degrees(cfg.tol, std::span(st.residuals).subspan(first),
                                             std::span(st.ritz).subspan(first), interval, cfg.deg_max);
        for (auto& d : st.degrees)
        {
            d = filter::make_even(d, cfg.deg_max);
        }

        std::vector<std::size_t> perm(remaining);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(),
                         [&](std::size_t x, std::size_t y) { return st.degrees[x] < st.degrees[y]; });
        if (!is_identity(perm))
        {
            permute_columns(st.basis, first, perm, work.view());
            permute_tail(st.ritz, first, perm);
            permute_tail(st.residuals, first, perm);
            permute_tail(st.degrees, 0, perm);
        }
    }

    rep.iterations = st.iteration;
    rep.matvecs = st.matvecs;
    rep.locked = st.locked;
    rep.converged = st.locked >= cfg.nev;
    rep.comm = difference(a.stats(), stats_before);
    rep.seconds.all = seconds_since(t_all);

    if (!rep.converged && !cfg.one_iteration)
    {
        throw PartialResultError("solve: " + std::to_string(st.locked) + " of " + std::to_string(cfg.nev) +
                                     " pairs converged within " + std::to_string(cfg.max_iters) + " iterations",
                                 collect(st, st.locked, std::move(rep)));
    }
    return collect(st, cfg.nev, std::move(rep));
}

SolveResult solve(const DenseMatrix& a, const grid::Grid& grid, const SolverConfig& cfg, const DenseMatrix* initial)
{
    if (!cfg.largest)
    {
        hemm::DistributedMatrix dist(a, grid);
        return solve(dist, cfg, initial);
    }
    DenseMatrix neg = a;
    for (auto& x : neg.values())
    {
        x = -x;
    }
    hemm::DistributedMatrix dist(neg, grid);
    SolverConfig inner = cfg;
    inner.largest = false;
    auto flip = [](SolveResult r) {
        const std::size_t k = r.values.size();
        SolveResult out;
        out.report = std::move(r.report);
        out.vectors = DenseMatrix(r.vectors.rows(), k);
        for (std::size_t j = 0; j < k; ++j)
        {
            out.values.push_back(-r.values[k - 1 - j]);
            out.residuals.push_back(r.residuals[k - 1 - j]);
            copy_into(r.vectors.columns(k - 1 - j, 1), out.vectors.columns(j, 1));
        }
        return out;
    };
    try
    {
        return flip(solve(dist, inner, initial));
    }
    catch (const PartialResultError& e)
    {
        throw PartialResultError(e.what(), flip(e.partial()));
    }
}

} // namespace chase::solver
