#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chase/linalg.hpp"
#include "chase/random.hpp"
#include "chase/solver.hpp"

namespace chase::solver
{

namespace
{

constexpr std::size_t kMaxRestarts = 3;
constexpr std::uint64_t kLanczosStream = 1000;

struct RunOutcome
{
    std::vector<double> theta;
    std::vector<double> weight;
    double upper = 0.0;
    std::size_t restarts = 0;
    bool truncated = false;
};

// Two passes of classical Gram-Schmidt against the first k basis columns.
void orthogonalize(const DenseMatrix& basis, std::size_t k, std::span<double> w)
{
    const std::size_t n = w.size();
    for (int pass = 0; pass < 2; ++pass)
    {
        for (std::size_t j = 0; j < k; ++j)
        {
            const auto q = basis.col(j);
            const double s = core::dot(q, w);
            for (std::size_t i = 0; i < n; ++i)
            {
                w[i] -= s * q[i];
            }
        }
    }
}

RunOutcome lanczos_run(const hemm::DistributedMatrix& a, std::size_t steps, GaussianStream& rng)
{
    const std::size_t n = a.order();
    steps = std::min(steps, n);
    DenseMatrix basis(n, steps);
    DenseMatrix w(n, 1);
    std::vector<double> alpha;
    std::vector<double> beta;
    RunOutcome out;

    auto fresh = [&](std::size_t k) {
        auto q = basis.col(k);
        for (auto& x : q)
        {
            x = rng();
        }
        const double before = core::norm2(q);
        orthogonalize(basis, k, q);
        const double after = core::norm2(q);
        if (!(after > 1e-8 * before))
        {
            return false;
        }
        for (auto& x : q)
        {
            x /= after;
        }
        return true;
    };

    fresh(0);
    double scale = 0.0;
    double beta_last = 0.0;
    std::size_t k = 0;
    for (;; ++k)
    {
        hemm::apply_into(a, basis.columns(k, 1), w.view());
        auto wk = w.col(0);
        const auto qk = basis.col(k);
        const double ak = core::dot(qk, wk);
        alpha.push_back(ak);
        for (std::size_t i = 0; i < n; ++i)
        {
            wk[i] -= ak * qk[i];
        }
        orthogonalize(basis, k + 1, wk);
        const double bk = core::norm2(wk);
        scale = std::max({scale, std::abs(ak), bk});
        if (k + 1 == steps)
        {
            beta_last = bk;
            break;
        }
        const double threshold = double(n) * std::numeric_limits<double>::epsilon() * scale;
        if (bk > threshold)
        {
            auto next = basis.col(k + 1);
            for (std::size_t i = 0; i < n; ++i)
            {
                next[i] = wk[i] / bk;
            }
            beta.push_back(bk);
            continue;
        }
        // Invariant subspace found: continue from a fresh direction, or stop.
        if (out.restarts < kMaxRestarts && fresh(k + 1))
        {
            ++out.restarts;
            beta.push_back(0.0);
            continue;
        }
        out.truncated = true;
        beta_last = 0.0;
        break;
    }

    const auto eig = core::tridiagonal_eig(alpha, beta);
    out.theta = eig.values;
    out.weight.resize(eig.values.size());
    for (std::size_t i = 0; i < eig.values.size(); ++i)
    {
        out.weight[i] = eig.vectors(0, i) * eig.vectors(0, i);
    }
    out.upper = eig.values.back() + std::abs(beta_last);
    return out;
}

} // namespace

filter::FilterInterval guarded_interval(double mu_ne, double b_sup)
{
    const double scale = std::max(1.0, std::abs(b_sup));
    if (mu_ne >= b_sup - 1e-12 * scale)
    {
        b_sup = std::max(b_sup, mu_ne) + scale * 1e-8;
    }
    return {mu_ne, b_sup};
}

LanczosResult lanczos_bounds(const hemm::DistributedMatrix& a, const SolverConfig& cfg)
{
    validate(cfg);
    if (a.order() != cfg.n)
    {
        throw ShapeError("lanczos_bounds: matrix order does not match the configuration");
    }
    LanczosResult res;
    std::vector<std::pair<double, double>> density;
    double upper = -std::numeric_limits<double>::infinity();
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < cfg.lanczos_runs; ++run)
    {
        GaussianStream rng(cfg.seed, kLanczosStream + run);
        const auto out = lanczos_run(a, cfg.lanczos_steps, rng);
        res.restarts += out.restarts;
        res.truncated_runs += out.truncated ? 1 : 0;
        upper = std::max(upper, out.upper);
        lower = std::min(lower, out.theta.front());
        for (std::size_t i = 0; i < out.theta.size(); ++i)
        {
            density.emplace_back(out.theta[i], out.weight[i]);
        }
    }

    // Invert the averaged cumulative Ritz density at (nev + nex) / n.
    std::stable_sort(density.begin(), density.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    const double quantile = double(cfg.n_e()) / double(cfg.n);
    double mu_ne = density.back().first;
    double cumulative = 0.0;
    for (const auto& [theta, tau] : density)
    {
        cumulative += tau / double(cfg.lanczos_runs);
        if (cumulative >= quantile)
        {
            mu_ne = theta;
            break;
        }
    }

    res.bounds.mu_1 = lower;
    res.bounds.mu_ne = mu_ne;
    res.bounds.b_sup = upper;
    res.start = GaussianStream(cfg.seed, 0).matrix(cfg.n, cfg.n_e());
    return res;
}

} // namespace chase::solver
