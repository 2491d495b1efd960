#include "chase/filter.hpp"

#include <algorithm>
#include <cmath>

#include "chase/errors.hpp"

namespace chase::filter
{

void validate(const FilterInterval& interval)
{
    if (!std::isfinite(interval.lower) || !std::isfinite(interval.upper) || !(interval.upper > interval.lower))
    {
        throw InvalidArgument("filter interval is degenerate (need upper > lower)");
    }
}

SweepStats filter_sweep(hemm::DistributedMatrix& a, hemm::DistributedOperand& v, hemm::DistributedOperand& w,
                        const FilterInterval& interval, std::span<const std::size_t> degrees, double lambda_1)
{
    validate(interval);
    if (degrees.size() != v.cols || w.cols != v.cols)
    {
        throw ShapeError("filter_sweep: degree count does not match operand width");
    }
    if (!std::is_sorted(degrees.begin(), degrees.end()))
    {
        throw InvalidArgument("filter_sweep: columns must be sorted by ascending degree");
    }
    if (!degrees.empty() && degrees.front() == 0)
    {
        throw InvalidArgument("filter_sweep: degrees must be at least 1");
    }
    const double c = interval.center();
    const double e = interval.half_width();
    if (!(lambda_1 < c))
    {
        throw InvalidArgument("filter_sweep: lambda_1 must lie below the interval center");
    }

    SweepStats out;
    if (degrees.empty())
    {
        return out;
    }
    const auto& stats = a.stats();
    const auto redistributions_before = stats.redistribution_count;
    const auto matvecs_before = stats.matvec_count;

    const std::size_t max_degree = degrees.back();
    const std::size_t ncols = degrees.size();
    auto first_active = [&](std::size_t step) {
        return static_cast<std::size_t>(std::lower_bound(degrees.begin(), degrees.end(), step) - degrees.begin());
    };

    a.apply_shift(c);

    const double sigma_1 = e / (lambda_1 - c);
    double sigma = sigma_1;
    hemm::hemm_forward(a, v, w, sigma_1 / e, 0.0, 0, ncols);

    for (std::size_t step = 2; step <= max_degree; ++step)
    {
        const double sigma_new = 1.0 / (2.0 / sigma_1 - sigma);
        const double alpha = 2.0 * sigma_new / e;
        const double beta = -sigma * sigma_new;
        const std::size_t col0 = first_active(step);
        if (step % 2 == 0)
        {
            hemm::hemm_backward(a, w, v, alpha, beta, col0, ncols - col0);
        }
        else
        {
            hemm::hemm_forward(a, v, w, alpha, beta, col0, ncols - col0);
        }
        sigma = sigma_new;
    }

    a.apply_shift(-c);

    for (std::size_t d : degrees)
    {
        out.matvecs += d;
    }
    out.redistributions = stats.redistribution_count - redistributions_before;
    out.hemm_matvecs = stats.matvec_count - matvecs_before;
    return out;
}

FilterResult chebyshev_filter(hemm::DistributedMatrix& a, const DenseMatrix& x, const FilterInterval& interval,
                              std::span<const std::size_t> degrees, double lambda_1)
{
    const auto& g = a.grid();
    auto v = hemm::distribute(x, g, hemm::Layout::V);
    auto w = hemm::make_operand(g, hemm::Layout::W, x.cols());
    FilterResult res;
    res.stats = filter_sweep(a, v, w, interval, degrees, lambda_1);

    // Assembly happens once, after the sweep.
    const DenseMatrix from_v = hemm::assemble(v, g, &a.stats());
    const bool any_odd = std::any_of(degrees.begin(), degrees.end(), [](std::size_t d) { return d % 2 == 1; });
    res.filtered = from_v;
    if (any_odd)
    {
        const DenseMatrix from_w = hemm::assemble(w, g, &a.stats());
        for (std::size_t col = 0; col < degrees.size(); ++col)
        {
            if (degrees[col] % 2 == 1)
            {
                std::copy_n(from_w.col(col).data(), x.rows(), res.filtered.col(col).data());
            }
        }
    }
    return res;
}

std::vector<std::size_t> optimal_degrees(double tol, std::span<const double> residuals,
                                         std::span<const double> ritz_values, const FilterInterval& interval,
                                         std::size_t cap)
{
    validate(interval);
    if (residuals.size() != ritz_values.size())
    {
        throw ShapeError("optimal_degrees: residual and Ritz value counts differ");
    }
    if (!(tol > 0.0))
    {
        throw InvalidArgument("optimal_degrees: tol must be positive");
    }
    cap = std::max<std::size_t>(cap, 1);
    const double c = interval.center();
    const double e = interval.half_width();
    std::vector<std::size_t> degrees(residuals.size());
    for (std::size_t a = 0; a < residuals.size(); ++a)
    {
        const double t = (c - ritz_values[a]) / e;
        if (std::abs(t) <= 1.0)
        {
            degrees[a] = cap;
            continue;
        }
        const double rho = std::abs(t) + std::sqrt(t * t - 1.0);
        const double ratio = residuals[a] / tol;
        const double raw = ratio > 0.0 ? std::ceil(std::log(ratio) / std::log(rho)) : 1.0;
        if (!(raw < double(cap)))
        {
            degrees[a] = cap;
        }
        else
        {
            degrees[a] = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
        }
    }
    return degrees;
}

std::size_t make_even(std::size_t degree, std::size_t cap)
{
    const std::size_t even_cap = std::max<std::size_t>(2, cap - cap % 2);
    const std::size_t even = degree + degree % 2;
    return std::clamp<std::size_t>(even, 2, even_cap);
}

} // namespace chase::filter
