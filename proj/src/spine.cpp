#include "spinesim/spine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "spinesim/cpp_trees.hpp"
#include "spinesim/rescale.hpp"
#include "spinesim/stats.hpp"

namespace spinesim {

double harmonic_value(Harmonic h, Interval const& I) noexcept
{
    return h == Harmonic::unit ? 1.0 : I.length();
}

Harmonic default_harmonic(double R) noexcept
{
    return R == 0 ? Harmonic::unit : Harmonic::interval_length;
}

// ---------------------------------------------------------------- nu

NuDistribution::NuDistribution(std::vector<double> weights) : weights_(std::move(weights))
{
    if (weights_.empty())
        throw std::invalid_argument("nu needs at least one weight");
    double total = 0;
    for (double w : weights_)
    {
        if (!(w > 0) || !std::isfinite(w))
            throw std::invalid_argument("nu weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("nu weights must sum to 1");
    cdf_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cdf_.begin());
}

NuDistribution NuDistribution::uniform(std::uint32_t N)
{
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    return NuDistribution(std::vector<double>(N, 1.0 / N));
}

NuDistribution NuDistribution::branch_times(std::uint32_t N, double R)
{
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    const RescaleR F(R);
    std::vector<double> w(N);
    double prev = 0;
    for (std::uint32_t n = 0; n < N; ++n)
    {
        const double next = n + 1 == N ? 1.0 : F.forward(double(n + 1) / N);
        w[n] = next - prev;
        prev = next;
    }
    return NuDistribution(std::move(w));
}

NuDistribution default_nu(std::uint32_t N, double R)
{
    return R > 1 ? NuDistribution::branch_times(N, R) : NuDistribution::uniform(N);
}

std::uint32_t NuDistribution::sample(Rng& rng) const
{
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto n = static_cast<std::uint32_t>(it - cdf_.begin());
    return std::min(n, N() - 1);
}

// ---------------------------------------------------------------- paths

template <class Time>
Interval Path<Time>::at(Time t) const
{
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin())
        throw std::out_of_range("path queried before its start time");
    return states[static_cast<std::size_t>(it - times.begin()) - 1];
}

template <class Time>
Path<Time> Path<Time>::prefix(Time t) const
{
    Path out;
    out.times.clear();
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i)
    {
        out.times.push_back(times[i]);
        out.states.push_back(states[i]);
    }
    return out;
}

template struct Path<std::uint32_t>;
template struct Path<double>;

namespace {

template <class Time>
void append_after(Path<Time>& head, Path<Time> const& tail)
{
    for (std::size_t i = 1; i < tail.times.size(); ++i)
        head.push(tail.times[i], tail.states[i]);
}

}  // namespace

double size_biased_uniform(double L, Rng& rng)
{
    if (!(L > 0))
        throw std::invalid_argument("size-biased uniform needs L > 0");
    return L * std::sqrt(rng.uniform_pos());
}

Interval spine_fragment(Interval const& I, Rng& rng)
{
    const double u = size_biased_uniform(I.length(), rng);
    if (rng.coin())
        return {I.lo, std::min(I.lo + u, I.hi)};
    return {std::max(I.hi - u, I.lo), I.hi};
}

namespace {

double jump_probability(Interval const& I, std::uint32_t N)
{
    const double p = I.length() / N;
    if (p > 1)
        throw std::invalid_argument("spine jump probability exceeds 1");
    return p;
}

}  // namespace

Interval spine_step_discrete(Interval const& I, ModelParams const& params, Rng& rng)
{
    const double p = jump_probability(I, params.N);
    if (p > 0 && rng.uniform() < p)
        return spine_fragment(I, rng);
    return I;
}

DiscretePath spine_path_discrete(Interval start, std::uint32_t t0, std::uint32_t end,
                                 ModelParams const& params, Rng& rng)
{
    DiscretePath path(start, t0);
    std::uint64_t n = t0;
    Interval cur = start;
    while (true)
    {
        const double p = jump_probability(cur, params.N);
        if (p == 0)
            break;
        n += rng.geometric_failures(p) + 1;
        if (n > end)
            break;
        cur = spine_fragment(cur, rng);
        path.push(static_cast<std::uint32_t>(n), cur);
    }
    return path;
}

ContinuousPath spine_path_continuous(Interval start, double t_max, Rng& rng, double t0)
{
    ContinuousPath path(start, t0);
    double t = t0;
    Interval cur = start;
    while (cur.length() > 0)
    {
        t += rng.exponential(cur.length());
        if (t > t_max)
            break;
        cur = spine_fragment(cur, rng);
        path.push(t, cur);
    }
    return path;
}

SpineConvergence spine_discrete_converges_check(Interval I0, std::uint32_t N, double t,
                                                std::size_t replicates, RunContext const& ctx)
{
    ModelParams params{I0.length(), N};
    params.validate();
    const std::uint32_t horizon = params.horizon(t);
    SpineConvergence out;
    out.discrete_sample = map_replicates<double>(replicates, ctx, 0x5B, [&](std::size_t, Rng& rng) {
        return spine_path_discrete(I0, 0, horizon, params, rng).back().length();
    });
    out.continuous_sample = map_replicates<double>(replicates, ctx, 0x5C, [&](std::size_t, Rng& rng) {
        return spine_path_continuous(I0, t, rng).back().length();
    });
    for (double x : out.discrete_sample)
        out.discrete.add(x);
    for (double x : out.continuous_sample)
        out.continuous.add(x);
    const auto ks = stats::ks_two_sample(out.discrete_sample, out.continuous_sample);
    out.ks_statistic = ks.statistic;
    out.ks_p_value = ks.p_value;
    return out;
}

// ---------------------------------------------------------------- k-spines

DiscreteKSpine sample_kspine_discrete(std::uint32_t k, NuDistribution const& nu, Interval I0,
                                      Rng& rng)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    const std::uint32_t N = nu.N();
    const ModelParams params{I0.length(), N};
    DiscreteKSpine s;
    s.k = k;
    s.horizon = N;
    for (std::uint32_t i = 0; i + 1 < k; ++i)
        s.branch_times.push_back(nu.sample(rng));
    s.paths.reserve(k);
    s.paths.push_back(spine_path_discrete(I0, 0, N, params, rng));
    for (std::uint32_t i = 0; i + 1 < k; ++i)
    {
        const std::uint32_t w = s.branch_times[i];
        auto next = s.paths[i].prefix(w);
        append_after(next, spine_path_discrete(s.paths[i].at(w), w, N, params, rng));
        s.paths.push_back(std::move(next));
    }
    return s;
}

ContinuousKSpine sample_kspine_continuous(std::uint32_t k, double R, Rng& rng)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    const RescaleR F(R);
    ContinuousKSpine s;
    s.k = k;
    s.horizon = 1.0;
    for (std::uint32_t i = 0; i + 1 < k; ++i)
        s.branch_times.push_back(F.inverse(rng.uniform()));
    s.paths.reserve(k);
    s.paths.push_back(spine_path_continuous({0.0, R}, 1.0, rng));
    for (std::uint32_t i = 0; i + 1 < k; ++i)
    {
        const double w = s.branch_times[i];
        auto next = s.paths[i].prefix(w);
        append_after(next, spine_path_continuous(s.paths[i].at(w), 1.0, rng, w));
        s.paths.push_back(std::move(next));
    }
    return s;
}

// ---------------------------------------------------------------- bias

double factorial_moment_ratio(double mean, std::uint32_t d)
{
    if (!(mean > 0))
        throw std::invalid_argument("offspring mean must be positive");
    // m_d = sum_j j(j-1)...(j-d+1) P(K = j), summed until the pmf tail is negligible.
    double pmf = std::exp(-mean);
    double md = 0;
    for (std::uint32_t j = 0; j < 10'000; ++j)
    {
        if (j > 0)
            pmf *= mean / j;
        if (j >= d)
        {
            double falling = 1;
            for (std::uint32_t r = 0; r < d; ++r)
                falling *= double(j - r);
            md += falling * pmf;
        }
        if (j > mean + d && pmf < 1e-20)
            break;
    }
    double dfact = 1;
    for (std::uint32_t r = 2; r <= d; ++r)
        dfact *= r;
    return md / (dfact * std::pow(mean, d));
}

double delta_k(DiscreteKSpine const& spine, NuDistribution const& nu, ModelParams const& params,
               DeltaOptions const& options)
{
    const double N = params.N;
    std::vector<double> times(spine.branch_times.begin(), spine.branch_times.end());
    double delta = 1.0;
    for (auto const& bp : branch_points(times))
    {
        const auto gen = static_cast<std::uint32_t>(bp.time);
        const Interval Y = spine.paths.at(bp.first_leaf).at(gen);
        const double h = harmonic_value(options.harmonic, Y);
        delta *= std::pow(h / (N * nu.weight(gen)), bp.degree - 1);
        double dfact = 1;
        for (std::uint32_t r = 2; r <= bp.degree; ++r)
            dfact *= r;
        double moment = 1.0 / dfact;
        if (options.form == FactorialMomentForm::general)
            moment = factorial_moment_ratio(offspring_mean(Y, params), bp.degree);
        if (options.drop_degree_factorial)
            moment *= dfact;
        delta *= moment;
    }
    for (std::uint32_t i = 0; i < spine.k; ++i)
    {
        const double h = harmonic_value(options.harmonic, spine.leaf(i));
        if (!(h > 0))
            throw std::domain_error("bias undefined: null harmonic value at leaf");
        delta /= h;
    }
    return delta;
}

UltrametricMatrix spine_sample_matrix(DiscreteKSpine const& spine)
{
    CppEncoding enc;
    enc.height = spine.horizon;
    enc.times.assign(spine.branch_times.begin(), spine.branch_times.end());
    auto m = phi_decode(enc);
    m.marks.resize(spine.k);
    for (std::uint32_t i = 0; i < spine.k; ++i)
        m.marks[i] = spine.leaf(i).length();
    return m;
}

// ---------------------------------------------------------------- many-to-few

namespace {

double factorial(std::uint32_t k)
{
    double f = 1;
    for (std::uint32_t r = 2; r <= k; ++r)
        f *= r;
    return f;
}

}  // namespace

Accumulator many_to_few_rhs(ManyToFewSetup const& setup, NuDistribution const& nu,
                            TestFunctional const& phi, std::size_t replicates,
                            RunContext const& ctx, DeltaOptions options)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    if (nu.N() != setup.params.N)
        throw std::invalid_argument("nu must live on {0, ..., N-1}");
    setup.params.validate();
    options.harmonic = setup.harmonic;
    const Interval I0 = setup.params.root();
    const double prefactor = harmonic_value(setup.harmonic, I0) *
                             std::pow(double(setup.params.N), setup.k - 1) * factorial(setup.k);
    return accumulate_replicates(replicates, ctx, 0x5A, [&](std::size_t, Rng& rng) {
        const auto spine = sample_kspine_discrete(setup.k, nu, I0, rng);
        const double delta = delta_k(spine, nu, setup.params, options);
        const auto perm = random_permutation(setup.k, rng);
        const auto m = spine_sample_matrix(spine).permuted(perm);
        return prefactor * delta * phi(m);
    });
}

namespace {

UltrametricMatrix tuple_matrix(MarkedTree const& tree, std::span<NodeId const> nodes)
{
    const std::size_t k = nodes.size();
    UltrametricMatrix m;
    m.d = SquareMatrix(k);
    m.marks.resize(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        m.marks[i] = tree.node(nodes[i]).mark.length();
        for (std::size_t j = i + 1; j < k; ++j)
            m.d(i, j) = m.d(j, i) = tree.genealogical_depth(nodes[i], nodes[j]);
    }
    return m;
}

}  // namespace

TupleSum tuple_sum(MarkedTree const& tree, std::uint32_t gen, std::uint32_t k,
                   TestFunctional const& phi, Rng& rng, std::uint64_t tuple_budget,
                   std::uint64_t subsample)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    const auto [begin, end] = tree.generation(gen);
    const std::uint64_t Z = end - begin;
    TupleSum out;
    if (Z < k)
        return out;
    double total = 1;  // Z (Z-1) ... (Z-k+1)
    for (std::uint32_t r = 0; r < k; ++r)
        total *= double(Z - r);

    std::vector<NodeId> tuple(k);
    if (total <= double(tuple_budget))
    {
        std::vector<bool> used(Z, false);
        double sum = 0;
        auto rec = [&](auto&& self, std::uint32_t depth) -> void {
            if (depth == k)
            {
                sum += phi(tuple_matrix(tree, tuple));
                return;
            }
            for (std::uint64_t z = 0; z < Z; ++z)
            {
                if (used[z])
                    continue;
                used[z] = true;
                tuple[depth] = static_cast<NodeId>(begin + z);
                self(self, depth + 1);
                used[z] = false;
            }
        };
        rec(rec, 0);
        out.value = sum;
        return out;
    }

    // Uniform sample of `subsample` distinct ordered tuples; each has inclusion
    // probability B / total, hence the Horvitz-Thompson weight total / B.
    out.subsampled = true;
    const std::uint64_t B = std::min<std::uint64_t>(subsample, static_cast<std::uint64_t>(total));
    std::set<std::vector<NodeId>> seen;
    double sum = 0;
    while (seen.size() < B)
    {
        for (std::uint32_t r = 0; r < k; ++r)
        {
            bool clash = true;
            while (clash)
            {
                tuple[r] = static_cast<NodeId>(begin + rng.below(Z));
                clash = std::find(tuple.begin(), tuple.begin() + r, tuple[r]) != tuple.begin() + r;
            }
        }
        if (seen.insert(tuple).second)
            sum += phi(tuple_matrix(tree, tuple));
    }
    out.value = sum * total / double(B);
    return out;
}

ManyToFewLhs many_to_few_lhs(ManyToFewSetup const& setup, TestFunctional const& phi,
                             std::size_t replicates, RunContext const& ctx,
                             std::uint64_t tuple_budget, std::uint64_t subsample)
{
    if (replicates == 0)
        throw std::invalid_argument("need at least one replicate");
    setup.params.validate();
    struct Row
    {
        double value = 0;
        bool subsampled = false;
        bool capped = false;
    };
    const std::uint32_t N = setup.params.N;
    auto rows = map_replicates<Row>(replicates, ctx, 0x5D, [&](std::size_t, Rng& rng) {
        Row row;
        auto outcome = simulate_forward(setup.params, N, rng);
        if (std::holds_alternative<CapExceeded>(outcome))
            row.capped = true;
        else if (auto* s = std::get_if<Survived>(&outcome))
        {
            const auto ts = tuple_sum(s->tree, N, setup.k, phi, rng, tuple_budget, subsample);
            row.value = ts.value;
            row.subsampled = ts.subsampled;
        }
        return row;
    });
    ManyToFewLhs out;
    for (auto const& row : rows)
    {
        if (row.capped)
        {
            ++out.cap_exceeded;
            continue;
        }
        out.sums.add(row.value);
        out.subsampled += row.subsampled ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------- grafting

GraftedTree graft_tree(DiscreteKSpine const& spine, ModelParams const& params, Rng& rng)
{
    params.validate();
    const std::uint32_t N = spine.horizon;
    const std::uint32_t k = spine.k;

    struct Live
    {
        NodeId id;
        Interval mark;
        std::int64_t first = -1;  // leaf group [first, last] for spine vertices
        std::int64_t last = -1;
    };

    GraftedTree out;
    out.tree = MarkedTree(spine.paths.at(0).at(0));
    out.on_spine.push_back(true);
    std::vector<Live> current{{0, out.tree.node(0).mark, 0, std::int64_t(k) - 1}};
    std::vector<Live> next;

    for (std::uint32_t g = 0; g < N; ++g)
    {
        out.tree.begin_generation();
        next.clear();
        for (auto const& v : current)
        {
            if (v.first < 0)
            {
                const std::uint32_t K = offspring_count(v.mark, params, rng);
                for (std::uint32_t c = 0; c < K; ++c)
                {
                    const Interval mark = child_interval(v.mark, params, rng);
                    next.push_back({out.tree.add_child(v.id, mark), mark});
                    out.on_spine.push_back(false);
                }
                continue;
            }
            // Spine children: leaf runs whose consecutive branch times are > g.
            std::vector<std::pair<std::int64_t, std::int64_t>> groups;
            std::int64_t start = v.first;
            for (std::int64_t i = v.first; i < v.last; ++i)
            {
                if (spine.branch_times[static_cast<std::size_t>(i)] == g)
                {
                    groups.emplace_back(start, i);
                    start = i + 1;
                }
            }
            groups.emplace_back(start, v.last);
            const auto d = static_cast<std::uint32_t>(groups.size());
            const std::uint32_t K = d + rng.poisson(offspring_mean(v.mark, params));
            // Ranks of the spine children: a uniform d-subset of {0..K-1}, in order.
            std::vector<std::uint32_t> ranks(K);
            std::iota(ranks.begin(), ranks.end(), 0u);
            for (std::uint32_t i = 0; i < d; ++i)
                std::swap(ranks[i], ranks[i + rng.below(K - i)]);
            std::vector<bool> is_spine(K, false);
            for (std::uint32_t i = 0; i < d; ++i)
                is_spine[ranks[i]] = true;
            std::size_t gi = 0;
            for (std::uint32_t c = 0; c < K; ++c)
            {
                if (is_spine[c])
                {
                    const auto [a, b] = groups[gi++];
                    const Interval mark = spine.paths.at(static_cast<std::size_t>(a)).at(g + 1);
                    next.push_back({out.tree.add_child(v.id, mark), mark, a, b});
                    out.on_spine.push_back(true);
                }
                else
                {
                    const Interval mark = child_interval(v.mark, params, rng);
                    next.push_back({out.tree.add_child(v.id, mark), mark});
                    out.on_spine.push_back(false);
                }
            }
        }
        if (next.size() > params.node_cap)
            throw std::runtime_error("node cap exceeded while grafting");
        std::swap(current, next);
    }

    out.spine_leaves.assign(k, 0);
    for (auto const& v : current)
        if (v.first >= 0)
            out.spine_leaves[static_cast<std::size_t>(v.first)] = v.id;
    return out;
}

}  // namespace spinesim
