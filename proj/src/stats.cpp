#include "spinesim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace spinesim::stats {

double ks_statistic(std::span<double const> sample, std::function<double(double)> const& cdf)
{
    if (sample.empty())
        throw std::invalid_argument("KS statistic of an empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        const double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_statistic_weighted(std::span<double const> values,
                             std::span<double const> weights,
                             std::function<double(double)> const& cdf)
{
    if (values.size() != weights.size() || values.empty())
        throw std::invalid_argument("weighted KS needs matching non-empty inputs");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double below = 0;
    double d = 0;
    for (std::size_t idx = 0; idx < order.size();)
    {
        // Group ties so the ECDF jumps once per distinct value.
        const double x = values[order[idx]];
        double w = 0;
        while (idx < order.size() && values[order[idx]] == x)
            w += weights[order[idx++]];
        const double f = cdf(x);
        d = std::max({d, f - below / total, (below + w) / total - f});
        below += w;
    }
    return d;
}

double kolmogorov_q(double lambda)
{
    if (lambda < 0.2)
        return 1.0;
    double sum = 0;
    double sign = 1;
    for (int k = 1; k <= 100; ++k)
    {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16)
            break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double statistic, double n)
{
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * statistic);
}

TwoSampleKs ks_two_sample(std::span<double const> a, std::span<double const> b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("two-sample KS needs non-empty samples");
    std::vector<double> xa(a.begin(), a.end());
    std::vector<double> xb(b.begin(), b.end());
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0;
    while (i < xa.size() && j < xb.size())
    {
        const double x = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] == x)
            ++i;
        while (j < xb.size() && xb[j] == x)
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    TwoSampleKs out;
    out.statistic = d;
    out.p_value = ks_p_value(d, na * nb / (na + nb));
    return out;
}

double chi_square_p_value(std::span<double const> observed, std::span<double const> expected,
                          int dof_reduction)
{
    if (observed.size() != expected.size())
        throw std::invalid_argument("chi-square cell count mismatch");
    double stat = 0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i)
    {
        if (expected[i] <= 0)
        {
            if (observed[i] > 0)
                return 0.0;
            continue;
        }
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
        ++cells;
    }
    const int dof = cells - dof_reduction;
    if (dof < 1)
        throw std::invalid_argument("chi-square test needs at least one degree of freedom");
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

double quantile(std::span<double const> sample, double q)
{
    if (sample.empty())
        throw std::invalid_argument("quantile of an empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double mean(std::span<double const> x)
{
    if (x.empty())
        throw std::invalid_argument("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<double const> x)
{
    if (x.size() < 2)
        throw std::invalid_argument("variance needs two values");
    const double m = mean(x);
    double s = 0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double quantile_se(std::span<double const> sample, double q)
{
    if (sample.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v(sample.begin(), sample.end());
    std::sort(v.begin(), v.end());
    const double n = double(v.size());
    const double c = std::sqrt(n * q * (1 - q));
    const auto lo = static_cast<std::size_t>(std::clamp(std::floor(n * q - c), 0.0, n - 1));
    const auto hi = static_cast<std::size_t>(std::clamp(std::ceil(n * q + c), 0.0, n - 1));
    return (v[hi] - v[lo]) / 2;
}

double correlation(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("correlation needs paired samples");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0;
    double sxx = 0;
    double syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace spinesim::stats
