#include "spinesim/cpp_trees.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace spinesim {

UltrametricMatrix phi_decode(CppEncoding const& enc)
{
    const std::size_t k = enc.leaves();
    UltrametricMatrix m;
    m.d = SquareMatrix(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        double low = std::numeric_limits<double>::infinity();
        for (std::size_t j = i + 1; j < k; ++j)
        {
            low = std::min(low, enc.times[j - 1]);
            m.d(i, j) = m.d(j, i) = enc.height - low;
        }
    }
    return m;
}

CppEncoding phi_encode(UltrametricMatrix const& m, std::uint32_t N)
{
    if (!is_ultrametric(m.d, 0.0))
        throw std::invalid_argument("matrix is not ultrametric");
    CppEncoding enc;
    enc.height = N;
    const std::size_t k = m.k();
    for (std::size_t i = 0; i + 1 < k; ++i)
    {
        const double g = N - m.d(i, i + 1);
        if (g < 0 || g > N - 1.0 || g != std::floor(g))
            throw std::invalid_argument("branch time outside {0, ..., N-1}");
        enc.times.push_back(g);
    }
    if (!(phi_decode(enc).d == m.d))
        throw std::invalid_argument("matrix is not in planar CPP leaf order");
    return enc;
}

std::vector<BranchPoint> branch_points(std::span<double const> times)
{
    // Key (time, start of the maximal run of gaps whose times are >= time).
    std::map<std::pair<double, std::size_t>, BranchPoint> nodes;
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        std::size_t start = i;
        while (start > 0 && times[start - 1] >= times[i])
            --start;
        auto [it, fresh] = nodes.try_emplace({times[i], start},
                                             BranchPoint{times[i], 1, static_cast<std::uint32_t>(start)});
        ++it->second.degree;
    }
    std::vector<BranchPoint> out;
    out.reserve(nodes.size());
    for (auto const& [key, bp] : nodes)
        out.push_back(bp);
    return out;
}

std::vector<std::size_t> random_permutation(std::size_t k, Rng& rng)
{
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = k; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    return perm;
}

namespace {

UltrametricMatrix max_matrix(std::span<double const> h)
{
    const std::size_t k = h.size() + 1;
    UltrametricMatrix m;
    m.d = SquareMatrix(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        double high = 0;
        for (std::size_t j = i + 1; j < k; ++j)
        {
            high = std::max(high, h[j - 1]);
            m.d(i, j) = m.d(j, i) = high;
        }
    }
    return m;
}

}  // namespace

UltrametricMatrix sample_brownian_cpp_distances(std::uint32_t k, Rng& rng, bool permute)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    std::vector<double> h(k - 1);
    for (auto& x : h)
        x = rng.uniform();
    auto m = max_matrix(h);
    if (!permute)
        return m;
    auto perm = random_permutation(k, rng);
    return m.permuted(perm);
}

CppMeasure CppMeasure::brownian()
{
    return {[](double x) { return 1.0 / x; }, [](double u, double x0) { return u * x0; }};
}

double sample_cpp_depth(CppMeasure const& measure, double x0, double theta, Rng& rng)
{
    const double u = rng.uniform();
    if (measure.inverse_cdf)
        return measure.inverse_cdf(u, x0);
    // Smallest x in [0, x0] with theta / tail(x) >= u, by bisection.
    double lo = 0;
    double hi = x0;
    while (hi - lo > 1e-12)
    {
        const double mid = 0.5 * (lo + hi);
        const double tail = measure.tail(mid);
        const double cdf = std::isfinite(tail) ? theta / tail : 0.0;
        if (cdf >= u)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

CppPolynomial cpp_polynomial(CppMeasure const& measure, double x0, std::uint32_t k,
                             TestFunctional const& phi, std::size_t replicates,
                             RunContext const& ctx, bool permute)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    const double theta = measure.tail(x0);
    if (!std::isfinite(theta) || !(theta > 0))
        throw std::invalid_argument("tail measure must be finite and positive at x0");

    CppPolynomial out;
    double kfact = 1;
    for (std::uint32_t i = 2; i <= k; ++i)
        kfact *= i;
    out.prefactor = kfact / std::pow(theta, k);
    out.phi = accumulate_replicates(replicates, ctx, 0xC1, [&](std::size_t, Rng& rng) {
        std::vector<double> h(k - 1);
        for (auto& x : h)
            x = sample_cpp_depth(measure, x0, theta, rng);
        auto m = max_matrix(h);
        if (permute)
        {
            auto perm = random_permutation(k, rng);
            m = m.permuted(perm);
        }
        return phi(m);
    });
    return out;
}

}  // namespace spinesim
