#include "spinesim/entrance_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinesim/rescale.hpp"
#include "spinesim/stats.hpp"

namespace spinesim {

Interval entrance_interval(double t, Rng& rng)
{
    if (!(t > 0))
        throw std::invalid_argument("entrance law needs t > 0");
    const double e1 = rng.exponential(t);
    const double e2 = rng.exponential(t);
    return {-e1, e2};
}

double gamma2_cdf(double x, double t) noexcept
{
    if (x <= 0)
        return 0;
    return -std::expm1(-t * x) - t * x * std::exp(-t * x);
}

std::vector<double> entrance_lengths(double t, std::size_t n, RunContext const& ctx)
{
    if (!(t > 0))
        throw std::invalid_argument("entrance law needs t > 0");
    return map_replicates<double>(n, ctx, 0xE1,
                                  [&](std::size_t, Rng& rng) { return entrance_interval(t, rng).length(); });
}

// ---------------------------------------------------------------- Poisson records

PlanarPoisson::PlanarPoisson(double t_max, Rng& rng)
    : t_max_(t_max), rng_{Rng(rng(), 0), Rng(rng(), 1)}
{
    if (!(t_max > 0))
        throw std::invalid_argument("Poisson window needs t_max > 0");
}

void PlanarPoisson::grow(Side side)
{
    auto& recs = records_[side];
    auto& rng = rng_[side];
    const double tau = recs.empty() ? t_max_ : recs.back().time;
    const double x = recs.empty() ? 0.0 : recs.back().position;
    recs.push_back({tau * rng.uniform_pos(), x + rng.exponential(tau)});
}

double PlanarPoisson::endpoint(Side side, double s, double bound)
{
    if (!(s > 0))
        return bound;
    auto& recs = records_[side];
    for (std::size_t j = 0;; ++j)
    {
        if (j == recs.size())
            grow(side);
        if (recs[j].position >= bound)
            return bound;
        if (recs[j].time <= s)
            return recs[j].position;
    }
}

std::vector<PlanarPoisson::Record> const& PlanarPoisson::records_within(Side side, double bound)
{
    auto& recs = records_[side];
    while (recs.empty() || recs.back().position < bound)
        grow(side);
    return recs;
}

ContinuousPath coupled_path(PlanarPoisson& P, double M, double R)
{
    const double ref = M * R;
    const double bound[2] = {ref, (1 - M) * R};

    struct Event
    {
        double time;
        PlanarPoisson::Side side;
        double position;
    };
    std::vector<Event> events;
    for (auto side : {PlanarPoisson::left, PlanarPoisson::right})
        for (auto const& r : P.records_within(side, bound[side]))
            if (r.position < bound[side])
                events.push_back({r.time, side, r.position});
    std::sort(events.begin(), events.end(),
              [](Event const& a, Event const& b) { return a.time < b.time; });

    ContinuousPath path({0.0, R}, 0.0);
    Interval cur{0.0, R};
    for (auto const& e : events)
    {
        if (e.side == PlanarPoisson::left)
            cur.lo = ref - e.position;
        else
            cur.hi = ref + e.position;
        path.push(e.time, cur);
    }
    return path;
}

CoupledPath poisson_coupled_path(double R, double t_max, Rng& rng)
{
    if (!(R > 0))
        throw std::invalid_argument("coupled path needs R > 0");
    CoupledPath out;
    out.M = rng.uniform_pos();
    PlanarPoisson P(t_max, rng);
    out.path = coupled_path(P, out.M, R);
    return out;
}

// ---------------------------------------------------------------- checks

double coupling_oracle(double R, double t) noexcept
{
    const double a = t * R;
    return 1 + std::exp(-a) + 2 * std::expm1(-a) / a;
}

std::vector<CouplingRow> entrance_coupling_check(std::vector<double> const& R_grid, double t,
                                                 std::size_t replicates, RunContext const& ctx)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    const std::size_t G = R_grid.size();
    auto hits = map_replicates<std::vector<char>>(replicates, ctx, 0xE2, [&](std::size_t, Rng& rng) {
        const double M = rng.uniform_pos();
        PlanarPoisson P(t, rng);
        const double inf = std::numeric_limits<double>::infinity();
        const double l = P.endpoint(PlanarPoisson::left, t, inf);
        const double r = P.endpoint(PlanarPoisson::right, t, inf);
        std::vector<char> row(G);
        for (std::size_t g = 0; g < G; ++g)
        {
            const double R = R_grid[g];
            const double cl = std::min(l, M * R);
            const double cr = std::min(r, (1 - M) * R);
            row[g] = (cl + cr == l + r) ? 1 : 0;
        }
        return row;
    });
    std::vector<CouplingRow> out(G);
    for (std::size_t g = 0; g < G; ++g)
    {
        out[g].R = R_grid[g];
        out[g].oracle = coupling_oracle(R_grid[g], t);
        for (auto const& row : hits)
            out[g].coincide.add(row[g]);
    }
    return out;
}

namespace {

TwoSampleReport two_sample(std::vector<double> a, std::vector<double> b)
{
    TwoSampleReport rep;
    rep.a = std::move(a);
    rep.b = std::move(b);
    for (double x : rep.a)
        rep.mean_a.add(x);
    for (double x : rep.b)
        rep.mean_b.add(x);
    const auto ks = stats::ks_two_sample(rep.a, rep.b);
    rep.ks_statistic = ks.statistic;
    rep.ks_p_value = ks.p_value;
    return rep;
}

}  // namespace

TwoSampleReport self_similarity_check(double R, double c, double t, std::size_t replicates,
                                      RunContext const& ctx)
{
    if (!(c > 0))
        throw std::invalid_argument("scaling constant c must be > 0");
    auto a = map_replicates<double>(replicates, ctx, 0xE3, [&](std::size_t, Rng& rng) {
        return c * spine_path_continuous({0.0, R}, c * t, rng).back().length();
    });
    auto b = map_replicates<double>(replicates, ctx, 0xE4, [&](std::size_t, Rng& rng) {
        return spine_path_continuous({0.0, c * R}, t, rng).back().length();
    });
    return two_sample(std::move(a), std::move(b));
}

TwoSampleReport poisson_vs_spine_check(double R, double t, std::size_t replicates,
                                       RunContext const& ctx)
{
    auto a = map_replicates<double>(replicates, ctx, 0xE5, [&](std::size_t, Rng& rng) {
        return poisson_coupled_path(R, t, rng).path.back().length();
    });
    auto b = map_replicates<double>(replicates, ctx, 0xE6, [&](std::size_t, Rng& rng) {
        return spine_path_continuous({0.0, R}, t, rng).back().length();
    });
    return two_sample(std::move(a), std::move(b));
}

SpineLimitReport rescaled_spine_limit_check(double R, std::vector<double> const& u,
                                            std::size_t replicates, RunContext const& ctx)
{
    if (u.empty())
        throw std::invalid_argument("need at least one time");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!(u[i] > 0) || u[i] > 1 || (i > 0 && !(u[i] > u[i - 1])))
            throw std::invalid_argument("times must satisfy 0 < u_1 < ... < u_n <= 1");
    const RescaleR F(R);
    std::vector<double> s(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        s[i] = F.inverse(u[i]);
    const std::size_t n = u.size();
    auto rows = map_replicates<std::vector<double>>(replicates, ctx, 0xE7, [&](std::size_t, Rng& rng) {
        const auto path = spine_path_continuous({0.0, R}, s.back(), rng);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = s[i] * path.at(s[i]).length();
        return v;
    });
    SpineLimitReport rep;
    rep.u = u;
    rep.coordinate.resize(n);
    std::vector<std::vector<double>> cols(n, std::vector<double>(replicates));
    for (std::size_t r = 0; r < replicates; ++r)
        for (std::size_t i = 0; i < n; ++i)
        {
            rep.coordinate[i].add(rows[r][i]);
            cols[i][r] = rows[r][i];
        }
    rep.correlation.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
    {
        rep.mean.push_back(rep.coordinate[i].mean());
        rep.variance.push_back(replicates > 1 ? rep.coordinate[i].variance() : 0.0);
        for (std::size_t j = i + 1; j < n; ++j)
            rep.correlation[i][j] = rep.correlation[j][i] = stats::correlation(cols[i], cols[j]);
    }
    return rep;
}

}  // namespace spinesim
