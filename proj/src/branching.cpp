#include "spinesim/branching.hpp"

#include <array>

#include <cmath>
#include <string>

namespace spinesim {

void ModelParams::validate() const
{
    if (!(R >= 0) || !std::isfinite(R))
        throw std::invalid_argument("R must be a finite value >= 0");
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    if (node_cap < 1)
        throw std::invalid_argument("node_cap must be >= 1");
}

std::uint32_t ModelParams::horizon(double t) const
{
    if (!(t >= 0))
        throw std::invalid_argument("t must be >= 0");
    // Guard floor(t N) against representation error, e.g. 0.7 * 1000.
    return static_cast<std::uint32_t>(std::floor(t * N * (1 + 1e-12)));
}

double offspring_mean(Interval const& I, ModelParams const& params) noexcept
{
    return 1.0 + I.length() / params.N;
}

double recombination_probability(Interval const& I, ModelParams const& params) noexcept
{
    const double x = I.length() / params.N;
    return 2.0 * x / (1.0 + x);
}

std::uint32_t offspring_count(Interval const& I, ModelParams const& params, Rng& rng)
{
    return rng.poisson(offspring_mean(I, params));
}

Interval child_interval(Interval const& I, ModelParams const& params, Rng& rng)
{
    if (I.length() <= 0)
        return I;
    if (rng.uniform() >= recombination_probability(I, params))
        return I;
    const double cut = I.lo + I.length() * rng.uniform();
    return rng.coin() ? Interval{I.lo, cut} : Interval{cut, I.hi};
}

namespace {

// CDF of Poisson(2), up to the point where it rounds to 1.
struct Poisson2Table
{
    std::array<double, 32> cdf{};
    Poisson2Table()
    {
        double p = std::exp(-2.0);
        double c = p;
        for (std::size_t k = 0; k < cdf.size(); ++k)
        {
            cdf[k] = c;
            p *= 2.0 / double(k + 1);
            c += p;
        }
        cdf.back() = 2.0;  // catch-all
    }
};

std::uint32_t poisson2(Rng& rng) noexcept
{
    static const Poisson2Table table;
    const double u = rng.uniform();
    std::uint32_t k = 0;
    while (u >= table.cdf[k])
        ++k;
    return k;
}

Interval recombinant(Interval const& I, Rng& rng) noexcept
{
    const double cut = I.lo + I.length() * rng.uniform();
    return rng.coin() ? Interval{I.lo, cut} : Interval{cut, I.hi};
}

/*
 * Shared generation step: emits the children of `mark` in planar order.
 *
 * With x = |I|/N <= 1 the offspring are drawn by thinning Poisson(2)
 * candidates: each becomes a recombinant child w.p. x, an identical copy
 * w.p. (1-x)/2, nothing otherwise. That gives Poisson(1-x) copies and
 * Poisson(2x) recombinants, i.e. Poisson(1+x) children each recombining
 * w.p. 2x/(1+x), in exchangeable order. Falls back to direct sampling for x > 1.
 */
template <class Emit>
void reproduce(Interval const& mark, ModelParams const& params, Rng& rng, Emit&& emit)
{
    const double x = mark.length() / params.N;
    if (x > 1)
    {
        const std::uint32_t k = offspring_count(mark, params, rng);
        for (std::uint32_t i = 0; i < k; ++i)
            emit(child_interval(mark, params, rng));
        return;
    }
    const double keep = 0.5 * (1.0 + x);
    const std::uint32_t candidates = poisson2(rng);
    for (std::uint32_t i = 0; i < candidates; ++i)
    {
        const double v = rng.uniform();
        if (v < x)
            emit(recombinant(mark, rng));
        else if (v < keep)
            emit(mark);
    }
}

}  // namespace

SimOutcome simulate_forward(ModelParams const& params, Rng& rng)
{
    return simulate_forward(params, params.N, rng);
}

SimOutcome simulate_forward(ModelParams const& params, std::uint32_t horizon, Rng& rng)
{
    params.validate();
    MarkedTree tree(params.root());
    for (std::uint32_t g = 0; g < horizon; ++g)
    {
        auto [begin, end] = tree.generation(g);
        tree.begin_generation();
        for (NodeId u = begin; u < end; ++u)
        {
            const Interval mark = tree.node(u).mark;
            reproduce(mark, params, rng, [&](Interval c) { tree.add_child(u, c); });
        }
        const std::size_t live = tree.generation_size(g + 1);
        if (live == 0)
            return Extinct{g + 1};
        if (live > params.node_cap)
            return CapExceeded{g + 1, live};
    }
    return Survived{std::move(tree)};
}

Census simulate_census(ModelParams const& params, std::uint32_t horizon, Rng& rng,
                       bool record_mass)
{
    params.validate();
    Census out;
    std::vector<Interval> current{params.root()};
    std::vector<Interval> next;
    auto total = [](std::vector<Interval> const& gen) {
        double s = 0;
        for (auto const& I : gen)
            s += I.length();
        return s;
    };
    if (record_mass)
        out.mass.push_back(total(current));
    for (std::uint32_t g = 0; g < horizon; ++g)
    {
        next.clear();
        for (auto const& mark : current)
            reproduce(mark, params, rng, [&](Interval c) { next.push_back(c); });
        std::swap(current, next);
        if (record_mass)
            out.mass.push_back(total(current));
        if (current.empty())
        {
            out.status = Census::Status::extinct;
            out.generation = g + 1;
            return out;
        }
        if (current.size() > params.node_cap)
        {
            out.status = Census::Status::cap_exceeded;
            out.generation = g + 1;
            return out;
        }
    }
    out.status = Census::Status::survived;
    out.generation = horizon;
    out.last_generation = std::move(current);
    return out;
}

SurvivalEstimate survival_probability(ModelParams const& params, double t, std::size_t replicates,
                                      RunContext const& ctx, SurvivalOptions options)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    params.validate();
    const std::uint32_t horizon = params.horizon(t);
    // 0: extinct, 1: survived, 2: capped
    auto status = map_replicates<int>(replicates, ctx, 0x51, [&](std::size_t, Rng& rng) {
        auto c = simulate_census(params, horizon, rng);
        switch (c.status)
        {
            case Census::Status::extinct: return 0;
            case Census::Status::survived: return 1;
            case Census::Status::cap_exceeded: return 2;
        }
        return 0;
    });
    SurvivalEstimate est;
    est.horizon = horizon;
    for (int s : status)
    {
        if (s == 2)
        {
            ++est.cap_exceeded;
            if (options.exclude_capped)
                continue;
        }
        est.indicator.add(s == 0 ? 0.0 : 1.0);
    }
    return est;
}

std::vector<Accumulator> harmonic_mass(ModelParams const& params, std::uint32_t horizon,
                                       std::size_t replicates, RunContext const& ctx)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    auto runs = map_replicates<std::vector<double>>(
        replicates, ctx, 0x52, [&](std::size_t, Rng& rng) {
            auto c = simulate_census(params, horizon, rng, true);
            if (c.status == Census::Status::cap_exceeded)
                return std::vector<double>{};
            c.mass.resize(horizon + 1, 0.0);  // extinct runs carry zero mass afterwards
            return c.mass;
        });
    std::vector<Accumulator> acc(horizon + 1);
    for (auto const& m : runs)
        for (std::size_t g = 0; g < m.size(); ++g)
            acc[g].add(m[g]);
    return acc;
}

ConditioningFailure::ConditioningFailure(std::uint64_t attempts)
    : std::runtime_error("conditioning on survival failed after "
                         + std::to_string(attempts) + " attempts"),
      attempts_(attempts)
{
}

MarkedTree sample_conditioned(ModelParams const& params, double t, Rng& rng,
                              std::uint64_t max_attempts)
{
    const std::uint32_t horizon = params.horizon(t);
    for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt)
    {
        auto outcome = simulate_forward(params, horizon, rng);
        if (auto* s = std::get_if<Survived>(&outcome))
            return std::move(s->tree);
    }
    throw ConditioningFailure(max_attempts);
}

}  // namespace spinesim
