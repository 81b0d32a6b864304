#include "spinesim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "spinesim/stats.hpp"

namespace spinesim {

std::vector<NodeId> sample_individuals(MarkedTree const& tree, std::uint32_t gen, std::uint32_t k,
                                       Rng& rng)
{
    const auto [begin, end] = tree.generation(gen);
    if (begin == end)
        throw std::invalid_argument("tree is extinct at the sampling generation");
    std::vector<NodeId> out(k);
    for (auto& v : out)
        v = static_cast<NodeId>(begin + rng.below(end - begin));
    return out;
}

UltrametricMatrix rescaled_genealogy(MarkedTree const& tree, std::span<NodeId const> individuals,
                                     double R)
{
    const RescaleR F(R);
    const std::size_t k = individuals.size();
    UltrametricMatrix m;
    m.d = SquareMatrix(k);
    m.marks.resize(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        auto const& node = tree.node(individuals[i]);
        m.marks[i] = node.mark.length();
        const double n = node.generation;
        for (std::size_t j = i + 1; j < k; ++j)
        {
            const double depth = tree.genealogical_depth(individuals[i], individuals[j]);
            m.d(i, j) = m.d(j, i) = depth == 0 ? 0.0 : 1.0 - F.forward(1.0 - depth / n);
        }
    }
    return m;
}

UltrametricMatrix rescaled_genealogy(MarkedTree const& tree, double R, std::uint32_t k, Rng& rng)
{
    const auto individuals = sample_individuals(tree, tree.height(), k, rng);
    return rescaled_genealogy(tree, individuals, R);
}

SquareMatrix chromosomic_matrix(MarkedTree const& tree, std::span<NodeId const> individuals,
                                double R, Rng& rng)
{
    const double log_R = RescaleR(R).log_R();
    std::map<NodeId, double> reference;
    std::vector<double> M(individuals.size());
    for (std::size_t i = 0; i < individuals.size(); ++i)
    {
        auto [it, fresh] = reference.try_emplace(individuals[i], 0.0);
        if (fresh)
        {
            auto const& I = tree.node(individuals[i]).mark;
            it->second = rng.uniform(I.lo, I.hi);
        }
        M[i] = it->second;
    }
    const std::size_t k = individuals.size();
    SquareMatrix D(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            D(i, j) = std::log(std::max(std::abs(M[i] - M[j]), 2.0)) / log_R;
    return D;
}

DistanceAgreement distance_agreement_check(std::uint32_t k, double R, std::size_t replicates,
                                           RunContext const& ctx)
{
    if (k < 2)
        throw std::invalid_argument("distance agreement needs k >= 2");
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    const RescaleR F(R);
    auto rows = map_replicates<std::vector<double>>(replicates, ctx, 0xD1, [&](std::size_t, Rng& rng) {
        const auto spine = sample_kspine_continuous(k, R, rng);
        std::vector<double> M(k);
        for (std::uint32_t i = 0; i < k; ++i)
        {
            const Interval I = spine.leaf(i);
            M[i] = rng.uniform(I.lo, I.hi);
        }
        std::vector<double> out;
        for (std::uint32_t i = 0; i < k; ++i)
        {
            double w = 1.0;
            for (std::uint32_t j = i + 1; j < k; ++j)
            {
                w = std::min(w, spine.branch_times[j - 1]);
                const double d = 1.0 - F.forward(w);
                out.push_back(std::log(std::abs(M[i] - M[j])) / (d * F.log_R()));
            }
        }
        return out;
    });
    DistanceAgreement rep;
    rep.R = R;
    for (auto const& row : rows)
        for (double x : row)
        {
            rep.ratios.push_back(x);
            rep.mean.add(x);
        }
    rep.median = stats::quantile(rep.ratios, 0.5);
    rep.q05 = stats::quantile(rep.ratios, 0.05);
    rep.q25 = stats::quantile(rep.ratios, 0.25);
    rep.q75 = stats::quantile(rep.ratios, 0.75);
    rep.q95 = stats::quantile(rep.ratios, 0.95);
    return rep;
}

// ---------------------------------------------------------------- Yaglom

Estimate YaglomPoint::survival_ratio() const
{
    return Estimate::from(survival, N * std::log(R) / R);
}

YaglomPoint yaglom_point(ModelParams const& params, double t, std::size_t replicates,
                         RunContext const& ctx)
{
    params.validate();
    if (!(params.R > 1))
        throw std::invalid_argument("the Yaglom diagnostic needs R > 1");
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    YaglomPoint out;
    out.R = params.R;
    out.N = params.N;
    out.t = t;
    out.horizon = params.horizon(t);
    out.replicates = replicates;

    struct Run
    {
        Census::Status status = Census::Status::extinct;
        std::vector<double> lengths;
        double pair[2] = {0, 0};
    };
    auto runs = map_replicates<Run>(replicates, ctx, 0x71, [&](std::size_t, Rng& rng) {
        Run run;
        auto census = simulate_census(params, out.horizon, rng);
        run.status = census.status;
        if (census.status != Census::Status::survived)
            return run;
        run.lengths.reserve(census.last_generation.size());
        for (auto const& I : census.last_generation)
            run.lengths.push_back(I.length());
        const std::size_t Z = run.lengths.size();
        if (Z >= 2)
        {
            const std::size_t a = rng.below(Z);
            std::size_t b = rng.below(Z - 1);
            if (b >= a)
                ++b;
            run.pair[0] = run.lengths[a];
            run.pair[1] = run.lengths[b];
        }
        return run;
    });

    const double alpha = t * params.N * std::log(params.R);
    std::vector<double> values;
    std::vector<double> weights;
    std::vector<double> first;
    std::vector<double> second;
    for (auto const& run : runs)
    {
        if (run.status == Census::Status::cap_exceeded)
        {
            ++out.capped;
            continue;
        }
        const bool alive = run.status == Census::Status::survived;
        out.survival.add(alive ? 1.0 : 0.0);
        if (!alive)
            continue;
        const double Z = static_cast<double>(run.lengths.size());
        out.mass_ratio.add(Z / alpha);
        double s = 0;
        for (double x : run.lengths)
        {
            s += x;
            values.push_back(x);
            weights.push_back(1.0 / Z);
        }
        out.mark_mean.add(s / Z);
        if (run.lengths.size() >= 2)
        {
            first.push_back(run.pair[0]);
            second.push_back(run.pair[1]);
        }
    }
    if (!values.empty())
        out.mark_ks = stats::ks_statistic_weighted(values, weights,
                                                   [t](double x) { return -std::expm1(-t * x); });
    if (first.size() >= 3)
        out.chaos_correlation = stats::correlation(first, second);
    return out;
}

YaglomControl yaglom_critical_control(std::uint32_t N, std::size_t replicates, RunContext const& ctx)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    const ModelParams params{0.0, N};
    auto sizes = map_replicates<double>(replicates, ctx, 0x72, [&](std::size_t, Rng& rng) {
        auto census = simulate_census(params, N, rng);
        return static_cast<double>(census.last_generation.size());
    });
    YaglomControl out;
    out.N = N;
    std::vector<double> scaled;
    for (double z : sizes)
    {
        out.survival.add(z > 0 ? 1.0 : 0.0);
        if (z > 0)
        {
            out.scaled_size.add(z / N);
            scaled.push_back(z / N);
        }
    }
    if (!scaled.empty())
        out.ks_exp = stats::ks_statistic(scaled, [](double x) { return -std::expm1(-2 * x); });
    return out;
}

// ---------------------------------------------------------------- polynomials

Scaling Scaling::identity(std::uint32_t N)
{
    Scaling s;
    s.N = N;
    return s;
}

Scaling Scaling::recombination(double R, std::uint32_t N, double t, double survival)
{
    Scaling s;
    s.distance = Distance::log_rescaled;
    s.R = R;
    s.N = N;
    s.t = t;
    s.alpha = t * N * std::log(R);
    s.survival = survival;
    return s;
}

void Scaling::validate() const
{
    if (!(alpha > 0) || !std::isfinite(alpha))
        throw std::invalid_argument("mismatched scaling constants: alpha must be positive");
    if (!(survival > 0) || survival > 1)
        throw std::invalid_argument("mismatched scaling constants: survival must lie in (0, 1]");
    if (distance == Distance::log_rescaled)
    {
        if (!(R > 1))
            throw std::invalid_argument("mismatched scaling constants: log rescaling needs R > 1");
        const double expected = t * N * std::log(R);
        if (std::abs(alpha - expected) > 1e-9 * expected)
            throw std::invalid_argument("mismatched scaling constants: alpha must equal t N log R");
    }
}

namespace {

double power(double x, std::uint32_t k)
{
    double v = 1;
    for (std::uint32_t i = 0; i < k; ++i)
        v *= x;
    return v;
}

//! phi evaluated on the rescaled matrix, divided by alpha^k.
TestFunctional rescaled_functional(TestFunctional const& phi, Scaling const& s, double n,
                                   std::uint32_t k)
{
    const double norm = power(s.alpha, k);
    if (s.distance == Scaling::Distance::raw)
        return {phi.name, [phi, norm](UltrametricMatrix const& m) { return phi(m) / norm; }};
    const RescaleR F(s.R);
    return {phi.name, [phi, norm, F, n](UltrametricMatrix const& m) {
                UltrametricMatrix r = m;
                for (std::size_t i = 0; i < r.k(); ++i)
                    for (std::size_t j = 0; j < r.k(); ++j)
                        if (i != j)
                            r.d(i, j) = 1.0 - F.forward(1.0 - m.d(i, j) / n);
                return phi(r) / norm;
            }};
}

//! Sum of phi over all Z^k tuples (with repetition); subsampled beyond the budget.
double tuple_sum_with_replacement(MarkedTree const& tree, std::uint32_t gen, std::uint32_t k,
                                  TestFunctional const& phi, Rng& rng, std::uint64_t budget,
                                  std::uint64_t subsample)
{
    const auto [begin, end] = tree.generation(gen);
    const std::uint64_t Z = end - begin;
    if (Z == 0)
        return 0;
    const double total = power(double(Z), k);
    std::vector<NodeId> tuple(k, begin);
    auto value = [&] {
        UltrametricMatrix m;
        m.d = SquareMatrix(k);
        m.marks.resize(k);
        for (std::uint32_t i = 0; i < k; ++i)
        {
            m.marks[i] = tree.node(tuple[i]).mark.length();
            for (std::uint32_t j = i + 1; j < k; ++j)
                m.d(i, j) = m.d(j, i) = tree.genealogical_depth(tuple[i], tuple[j]);
        }
        return phi(m);
    };
    double sum = 0;
    if (total <= double(budget))
    {
        std::vector<std::uint64_t> idx(k, 0);
        while (true)
        {
            for (std::uint32_t i = 0; i < k; ++i)
                tuple[i] = static_cast<NodeId>(begin + idx[i]);
            sum += value();
            std::uint32_t pos = 0;
            while (pos < k && ++idx[pos] == Z)
                idx[pos++] = 0;
            if (pos == k)
                break;
        }
        return sum;
    }
    for (std::uint64_t b = 0; b < subsample; ++b)
    {
        for (auto& v : tuple)
            v = static_cast<NodeId>(begin + rng.below(Z));
        sum += value();
    }
    return sum * total / double(subsample);
}

}  // namespace

PolynomialEstimate polynomial_estimator(PolynomialMode mode, ModelParams const& params,
                                        std::uint32_t k, TestFunctional const& phi,
                                        Scaling const& scaling, std::size_t replicates,
                                        RunContext const& ctx, PolynomialOptions const& options)
{
    params.validate();
    scaling.validate();
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    if (scaling.N != params.N ||
        (scaling.distance == Scaling::Distance::log_rescaled && scaling.R != params.R))
        throw std::invalid_argument("mismatched scaling constants: (R, N) differ from the model");

    PolynomialEstimate out;
    if (mode == PolynomialMode::spine)
    {
        if (scaling.t != 1)
            throw std::invalid_argument("spine mode is defined at t = 1");
        const auto wrapped = rescaled_functional(phi, scaling, params.N, k);
        const ManyToFewSetup setup{k, params, default_harmonic(params.R)};
        out.raw = many_to_few_rhs(setup, default_nu(params.N, params.R), wrapped, replicates, ctx);
        out.scale = 1.0 / scaling.survival;
        return out;
    }

    const std::uint32_t horizon = params.horizon(scaling.t);
    const auto wrapped = rescaled_functional(phi, scaling, horizon, k);
    struct Row
    {
        double value = 0;
        int status = 0;  // 0 extinct, 1 survived, 2 capped
    };
    auto rows = map_replicates<Row>(replicates, ctx, 0xF0, [&](std::size_t, Rng& rng) {
        Row row;
        auto outcome = simulate_forward(params, horizon, rng);
        if (std::holds_alternative<CapExceeded>(outcome))
            row.status = 2;
        else if (auto* s = std::get_if<Survived>(&outcome))
        {
            row.status = 1;
            row.value = options.distinct
                            ? tuple_sum(s->tree, horizon, k, wrapped, rng, options.tuple_budget,
                                        options.subsample)
                                  .value
                            : tuple_sum_with_replacement(s->tree, horizon, k, wrapped, rng,
                                                         options.tuple_budget, options.subsample);
        }
        return row;
    });
    for (auto const& row : rows)
    {
        if (row.status == 2)
        {
            ++out.capped;
            continue;
        }
        out.raw.add(row.value);
        out.survivors += row.status == 1 ? 1 : 0;
    }
    out.scale = out.survivors > 0 ? double(out.raw.count()) / double(out.survivors) : 0.0;
    return out;
}

}  // namespace spinesim
