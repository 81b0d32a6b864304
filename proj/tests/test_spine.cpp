#include "doctest.h"

#include <cmath>

#include "spinesim/oracles.hpp"
#include "spinesim/rescale.hpp"
#include "spinesim/spine.hpp"
#include "spinesim/stats.hpp"

using namespace spinesim;

TEST_CASE("branch-time distributions")
{
    const auto u = NuDistribution::uniform(4);
    CHECK(u.N() == 4);
    CHECK(u.weight(2) == 0.25);
    const auto nu = NuDistribution::branch_times(10, 50);
    double total = 0;
    for (std::uint32_t n = 0; n < 10; ++n)
    {
        total += nu.weight(n);
        CHECK(nu.weight(n) == doctest::Approx(f_R((n + 1) / 10.0, 50) - f_R(n / 10.0, 50)));
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(nu.weight(0) > nu.weight(9));  // mass near the root under F_R
    CHECK_THROWS(NuDistribution({0.5, 0.6}));
    CHECK_THROWS(NuDistribution({1.0, 0.0}));
    CHECK(default_nu(5, 0).weight(0) == 0.2);

    Rng rng(2);
    std::vector<double> obs(10, 0.0), exp(10);
    const int n = 50000;
    for (int i = 0; i < n; ++i)
        obs[nu.sample(rng)] += 1;
    for (std::uint32_t j = 0; j < 10; ++j)
        exp[j] = n * nu.weight(j);
    CHECK(stats::chi_square_p_value(obs, exp) > 1e-3);
}

TEST_CASE("size-biased fragment lengths")
{
    Rng rng(6);
    std::vector<double> x;
    for (int i = 0; i < 40000; ++i)
        x.push_back(size_biased_uniform(3.0, rng));
    const double ks = stats::ks_statistic(x, [](double v) { return std::clamp(v * v / 9, 0.0, 1.0); });
    CHECK(stats::ks_p_value(ks, double(x.size())) > 1e-3);
    CHECK_THROWS(size_biased_uniform(0.0, rng));

    const Interval I{2, 5};
    for (int i = 0; i < 100; ++i)
    {
        const auto f = spine_fragment(I, rng);
        CHECK((f.lo == 2 || f.hi == 5));
        CHECK(I.contains(f));
    }
}

TEST_CASE("discrete spine step")
{
    const ModelParams p{2, 8};
    Rng rng(1);
    int stays = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i)
        if (spine_step_discrete({0, 2}, p, rng) == Interval{0, 2})
            ++stays;
    const double q = 0.75;
    CHECK(std::fabs(stays / double(n) - q) < 4 * std::sqrt(q * (1 - q) / n));
    CHECK_THROWS(spine_step_discrete({0, 9}, p, rng));
}

TEST_CASE("geometric skipping matches repeated steps")
{
    const ModelParams p{6, 20};
    std::vector<double> fast, slow;
    for (int i = 0; i < 20000; ++i)
    {
        Rng a(31, i), b(32, i);
        fast.push_back(spine_path_discrete({0, 6}, 0, 20, p, a).back().length());
        Interval I{0, 6};
        for (int g = 0; g < 20; ++g)
            I = spine_step_discrete(I, p, b);
        slow.push_back(I.length());
    }
    CHECK(stats::ks_two_sample(fast, slow).p_value > 1e-3);
}

TEST_CASE("path queries")
{
    DiscretePath path({0, 4}, 0);
    path.push(3, {0, 2});
    path.push(7, {1, 2});
    CHECK(path.at(0) == Interval{0, 4});
    CHECK(path.at(2) == Interval{0, 4});
    CHECK(path.at(3) == Interval{0, 2});
    CHECK(path.at(100) == Interval{1, 2});
    CHECK(path.jumps() == 2);
    const auto pre = path.prefix(5);
    CHECK(pre.jumps() == 1);
    CHECK(pre.back() == Interval{0, 2});

    Rng rng(4);
    const auto cp = spine_path_continuous({0, 0}, 10.0, rng);
    CHECK(cp.jumps() == 0);  // zero-length marks never jump
    CHECK_THROWS((void)DiscretePath({0, 1}, 5).at(2));
}

TEST_CASE("continuous spine holding time is Exp(|I|)")
{
    Accumulator first;
    for (int i = 0; i < 20000; ++i)
    {
        Rng rng(8, i);
        const auto p = spine_path_continuous({0, 2.5}, 50.0, rng);
        REQUIRE(p.jumps() >= 1);
        first.add(p.times[1]);
    }
    CHECK(std::fabs(first.mean() - 0.4) < 4 * first.se());
}

TEST_CASE("discrete spine converges to the continuous one")
{
    const auto r = spine_discrete_converges_check({0, 3}, 400, 1.0, 20000, RunContext{5, 0});
    CHECK(r.ks_p_value > 1e-3);
    CHECK(r.discrete.count() == 20000);
}

TEST_CASE("k-spine paths share their prefixes")
{
    const ModelParams p{5, 30};
    const auto nu = default_nu(30, 5);
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep)
    {
        const auto s = sample_kspine_discrete(4, nu, {0, 5}, rng);
        REQUIRE(s.paths.size() == 4);
        REQUIRE(s.branch_times.size() == 3);
        CHECK(s.horizon == 30);
        for (std::uint32_t i = 0; i + 1 < 4; ++i)
        {
            CHECK(s.branch_times[i] < 30);
            for (std::uint32_t g = 0; g <= s.branch_times[i]; ++g)
                CHECK(s.paths[i + 1].at(g) == s.paths[i].at(g));
        }
    }
    const auto c = sample_kspine_continuous(3, 100, rng);
    CHECK(c.horizon == 1.0);
    for (double w : c.branch_times)
        CHECK((w >= 0 && w <= 1));
    CHECK_THROWS(sample_kspine_discrete(0, nu, {0, 5}, rng));
}

TEST_CASE("spine bias in closed form")
{
    const ModelParams typeless{0, 5};
    const auto nu = NuDistribution::uniform(5);
    DeltaOptions unit;
    unit.harmonic = Harmonic::unit;
    Rng rng(3);
    for (int i = 0; i < 20; ++i)
    {
        const auto s2 = sample_kspine_discrete(2, nu, {0, 0}, rng);
        CHECK(delta_k(s2, nu, typeless, unit) == doctest::Approx(0.5));
        const auto s1 = sample_kspine_discrete(1, nu, {0, 0}, rng);
        CHECK(delta_k(s1, nu, typeless, unit) == 1.0);
    }
    // Dropping 1/d! doubles the bias of a binary split.
    auto mutated = unit;
    mutated.drop_degree_factorial = true;
    const auto s = sample_kspine_discrete(2, nu, {0, 0}, rng);
    CHECK(delta_k(s, nu, typeless, mutated) == doctest::Approx(1.0));
    // The length harmonic is undefined on a null leaf.
    CHECK_THROWS_AS(delta_k(s, nu, typeless), std::domain_error);
}

TEST_CASE("factorial moment ratio of Poisson offspring")
{
    double fact = 1;
    for (std::uint32_t d = 1; d <= 5; ++d)
    {
        fact *= d;
        for (double m : {0.5, 1.0, 1.7})
            CHECK(factorial_moment_ratio(m, d) == doctest::Approx(1 / fact).epsilon(1e-9));
    }
    CHECK_THROWS(factorial_moment_ratio(0, 2));
}

TEST_CASE("many-to-one is exact for the length functional")
{
    // k = 1: h(I0) E[phi / h(X_N)] with phi = |X_N| is R on every replicate.
    ManyToFewSetup setup{1, ModelParams{3, 10}, Harmonic::interval_length};
    const auto rhs = many_to_few_rhs(setup, default_nu(10, 3), mark_power(1, INFINITY), 500, RunContext{1, 0});
    CHECK(rhs.mean() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(rhs.se() == doctest::Approx(0).scale(1));
    const auto lhs = many_to_few_lhs(setup, mark_power(1, INFINITY), 20000, RunContext{2, 0});
    CHECK(std::fabs(lhs.sums.mean() - 3.0) < 3.5 * lhs.sums.se());
}

TEST_CASE("many-to-few agrees on both sides")
{
    const auto pmf = oracle::critical_generation_pmf(3);
    ManyToFewSetup typeless{2, ModelParams{0, 3}, Harmonic::unit};
    const auto rhs0 = many_to_few_rhs(typeless, NuDistribution::uniform(3), const_functional(), 200, RunContext{1, 0});
    CHECK(rhs0.mean() == doctest::Approx(oracle::factorial_moment(pmf, 2)));

    ManyToFewSetup setup{2, ModelParams{2, 4}, Harmonic::interval_length};
    const auto nu = default_nu(4, 2);
    for (auto const& phi : default_battery(4))
    {
        const auto lhs = Estimate::from(many_to_few_lhs(setup, phi, 30000, RunContext{4, 0}).sums);
        const auto rhs = Estimate::from(many_to_few_rhs(setup, nu, phi, 30000, RunContext{5, 0}));
        INFO(phi.name << ": lhs " << lhs.value << " +- " << lhs.se << ", rhs " << rhs.value << " +- " << rhs.se);
        CHECK(std::fabs(lhs.value - rhs.value) <= 3.5 * std::hypot(lhs.se, rhs.se) + 1e-12);
    }
}

TEST_CASE("ordered distinct tuple sums")
{
    MarkedTree t({0, 4});
    t.begin_generation();
    t.add_child(0, {0, 2});
    t.add_child(0, {2, 4});
    t.begin_generation();
    t.add_child(1, {0, 1});
    t.add_child(1, {1, 2});
    t.add_child(2, {2, 4});
    Rng rng(1);
    CHECK(tuple_sum(t, 2, 2, const_functional(), rng, 1000, 100).value == 6);
    CHECK(tuple_sum(t, 2, 3, const_functional(), rng, 1000, 100).value == 6);
    CHECK(tuple_sum(t, 2, 4, const_functional(), rng, 1000, 100).value == 0);
    // Pairs with depth <= 1: the two children of node 1, in both orders.
    CHECK(tuple_sum(t, 2, 2, dist_indicator(1), rng, 1000, 100).value == 2);
    // Over budget: subsampled, still unbiased.
    Accumulator est;
    for (int i = 0; i < 4000; ++i)
    {
        const auto s = tuple_sum(t, 2, 2, dist_indicator(1), rng, 2, 2);
        CHECK(s.subsampled);
        est.add(s.value);
    }
    CHECK(std::fabs(est.mean() - 2) < 4 * est.se());
}

TEST_CASE("grafted trees carry the spine")
{
    const ModelParams p{4, 12};
    const auto nu = default_nu(12, 4);
    Rng rng(21);
    for (int rep = 0; rep < 30; ++rep)
    {
        const auto s = sample_kspine_discrete(3, nu, {0, 4}, rng);
        const auto g = graft_tree(s, p, rng);
        REQUIRE(g.spine_leaves.size() == 3);
        CHECK(g.tree.valid());
        CHECK(g.tree.height() == 12);
        for (std::size_t i = 0; i < 3; ++i)
        {
            const auto& leaf = g.tree.node(g.spine_leaves[i]);
            CHECK(leaf.generation == 12);
            CHECK(leaf.mark == s.leaf(i));
            CHECK(g.on_spine[g.spine_leaves[i]]);
        }
        // Leaves i and i+1 split exactly at the branch time.
        for (std::size_t i = 0; i + 1 < 3; ++i)
        {
            const auto depth = g.tree.genealogical_depth(g.spine_leaves[i], g.spine_leaves[i + 1]);
            CHECK(depth == 12 - s.branch_times[i]);
        }
    }
}

TEST_CASE("spine vertices have size-biased offspring at uniform ranks")
{
    // k = 1, typeless: every spine vertex has 1 + Poisson(1) children.
    const ModelParams p{0, 6};
    const auto nu = NuDistribution::uniform(6);
    Rng rng(13);
    std::vector<double> counts(7, 0.0);
    double first_of_two = 0, pairs = 0;
    for (int rep = 0; rep < 6000; ++rep)
    {
        const auto s = sample_kspine_discrete(1, nu, {0, 0}, rng);
        const auto g = graft_tree(s, p, rng);
        NodeId v = g.spine_leaves[0];
        while (g.tree.node(v).parent != kNoParent)
        {
            const NodeId parent = g.tree.node(v).parent;
            const auto& pn = g.tree.node(parent);
            counts[std::min<std::uint32_t>(pn.child_count, 6)] += 1;
            if (pn.child_count == 2)
            {
                pairs += 1;
                first_of_two += (v == pn.first_child) ? 1 : 0;
            }
            v = parent;
        }
    }
    const double n = 6000.0 * 6;
    std::vector<double> exp(7, 0.0);
    double pk = std::exp(-1.0), tail = 1;
    for (int j = 1; j < 6; ++j)
    {
        exp[j] = n * pk;  // 1 + Poisson(1) = j  <=>  Poisson(1) = j - 1
        tail -= pk;
        pk /= j;
    }
    exp[6] = n * tail;
    std::vector<double> obs(counts.begin() + 1, counts.end()), ex(exp.begin() + 1, exp.end());
    CHECK(stats::chi_square_p_value(obs, ex) > 1e-3);
    CHECK(std::fabs(first_of_two / pairs - 0.5) < 4 * std::sqrt(0.25 / pairs));
}
