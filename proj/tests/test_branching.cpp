#include "doctest.h"

#include <cmath>
#include <variant>

#include "spinesim/branching.hpp"
#include "spinesim/oracles.hpp"
#include "spinesim/stats.hpp"

using namespace spinesim;

namespace {

std::vector<double> poisson_expected(double mean, std::size_t cells, double n)
{
    std::vector<double> e(cells);
    double p = std::exp(-mean), tail = 1;
    for (std::size_t j = 0; j + 1 < cells; ++j)
    {
        e[j] = n * p;
        tail -= p;
        p *= mean / double(j + 1);
    }
    e.back() = n * tail;
    return e;
}

}  // namespace

TEST_CASE("parameter validation and horizon")
{
    CHECK_THROWS_AS((ModelParams{-1, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ModelParams{1, 0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ModelParams{1, 5, 0}.validate()), std::invalid_argument);
    CHECK((ModelParams{20, 10}.r_exceeds_n()));
    CHECK((ModelParams{2, 400}.horizon(1.0)) == 400);
    CHECK((ModelParams{2, 400}.horizon(0.5)) == 200);
    CHECK_THROWS((void)ModelParams{2, 400}.horizon(-1));
    const Interval I{0, 2};
    const ModelParams p{2, 4};
    CHECK(offspring_mean(I, p) == 1.5);
    CHECK(recombination_probability(I, p) == doctest::Approx(2 * 0.5 / 1.5));
}

TEST_CASE("single-generation offspring law of the simulator")
{
    // x = |I|/N = 0.5: Poisson(1.5) children, each an exact copy w.p. 1/3.
    const ModelParams p{2, 4};
    const int n = 60000;
    std::vector<double> counts(7, 0.0);
    double copies = 0, children = 0;
    std::vector<double> cuts;
    for (int i = 0; i < n; ++i)
    {
        Rng rng(17, i);
        auto out = simulate_forward(p, 1, rng);
        std::size_t k = 0;
        if (auto* s = std::get_if<Survived>(&out))
        {
            const auto [b, e] = s->tree.generation(1);
            k = e - b;
            for (NodeId u = b; u < e; ++u)
            {
                const auto m = s->tree.node(u).mark;
                CHECK((m.lo == 0 || m.hi == 2));
                if (m == Interval{0, 2})
                    ++copies;
                else
                    cuts.push_back(m.lo == 0 ? m.hi : m.lo);
            }
        }
        children += double(k);
        counts[std::min<std::size_t>(k, 6)] += 1;
    }
    CHECK(stats::chi_square_p_value(counts, poisson_expected(1.5, 7, n)) > 1e-3);
    const double q = copies / children;
    CHECK(std::fabs(q - 1.0 / 3) < 4 * std::sqrt(q * (1 - q) / children));
    // Crossover points are uniform on the parent interval.
    const double ks = stats::ks_statistic(cuts, [](double x) { return std::clamp(x / 2, 0.0, 1.0); });
    CHECK(stats::ks_p_value(ks, double(cuts.size())) > 1e-3);
}

TEST_CASE("direct offspring helpers")
{
    const ModelParams p{3, 3};
    Rng rng(5);
    std::vector<double> counts(8, 0.0);
    int same = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i)
    {
        counts[std::min<std::uint32_t>(offspring_count({0, 3}, p, rng), 7)] += 1;
        if (child_interval({0, 3}, p, rng) == Interval{0, 3})
            ++same;
    }
    CHECK(stats::chi_square_p_value(counts, poisson_expected(2.0, 8, n)) > 1e-3);
    CHECK(std::fabs(same / double(n) - 0.0) < 1e-12);  // x = 1 always recombines
    Rng r2(1);
    CHECK(child_interval({1, 1}, p, r2) == Interval{1, 1});
}

TEST_CASE("typeless survival matches the generating-function oracle")
{
    for (std::uint32_t N : {5u, 20u})
    {
        const ModelParams p{0, N};
        const auto s = survival_probability(p, 1.0, 40000, RunContext{3, 0});
        const double oracle = oracle::critical_survival(N);
        CHECK(s.horizon == N);
        CHECK(s.cap_exceeded == 0);
        CHECK(std::fabs(s.indicator.mean() - oracle) < 3.5 * s.indicator.se());
    }
}

TEST_CASE("conditioned size equals the reciprocal survival probability")
{
    const std::uint32_t N = 15;
    const ModelParams p{0, N};
    Accumulator size;
    for (int i = 0; i < 60000; ++i)
    {
        Rng rng(23, i);
        const auto c = simulate_census(p, N, rng);
        if (c.status == Census::Status::survived)
            size.add(double(c.last_generation.size()));
    }
    CHECK(std::fabs(size.mean() - oracle::critical_conditioned_mean(N)) < 3.5 * size.se());
}

TEST_CASE("total length is a martingale")
{
    const ModelParams p{3, 30};
    const auto mass = harmonic_mass(p, 30, 20000, RunContext{8, 0});
    REQUIRE(mass.size() == 31);
    CHECK(mass[0].mean() == 3.0);
    for (std::uint32_t n : {1u, 10u, 30u})
        CHECK(std::fabs(mass[n].mean() - 3.0) < 3.5 * mass[n].se());
}

TEST_CASE("census and tree simulation consume the same stream")
{
    const ModelParams p{4, 25};
    for (int i = 0; i < 50; ++i)
    {
        Rng a(99, i), b(99, i);
        const auto tree = simulate_forward(p, 25, a);
        const auto census = simulate_census(p, 25, b, true);
        if (auto* s = std::get_if<Survived>(&tree))
        {
            REQUIRE(census.status == Census::Status::survived);
            const auto [lo, hi] = s->tree.generation(25);
            REQUIRE(census.last_generation.size() == hi - lo);
            for (NodeId u = lo; u < hi; ++u)
                CHECK(census.last_generation[u - lo] == s->tree.node(u).mark);
            CHECK(s->tree.valid());
        }
        else if (auto* e = std::get_if<Extinct>(&tree))
        {
            CHECK(census.status == Census::Status::extinct);
            CHECK(census.generation == e->generation);
        }
    }
}

TEST_CASE("node cap stops runaway runs")
{
    const ModelParams p{30, 30, 50};
    int capped = 0;
    for (int i = 0; i < 200; ++i)
    {
        Rng rng(4, i);
        const auto out = simulate_forward(p, 30, rng);
        if (auto* c = std::get_if<CapExceeded>(&out))
        {
            ++capped;
            CHECK(c->live > 50);
        }
    }
    CHECK(capped > 0);
    const auto s = survival_probability(p, 1.0, 200, RunContext{4, 0});
    const auto strict = survival_probability(p, 1.0, 200, RunContext{4, 0}, {true});
    CHECK(s.cap_exceeded > 0);
    CHECK(s.indicator.count() == 200);
    CHECK(strict.indicator.count() == 200 - strict.cap_exceeded);
}

TEST_CASE("rejection sampling of surviving trees")
{
    const ModelParams p{2, 40};
    Rng rng(12);
    const auto t = sample_conditioned(p, 1.0, rng);
    CHECK(t.height() == 40);
    CHECK(t.generation_size(40) > 0);
    Rng rng2(12);
    CHECK_THROWS_AS(sample_conditioned(ModelParams{0, 100000}, 1.0, rng2, 1), ConditioningFailure);
}

TEST_CASE("survival estimates do not depend on the thread count")
{
    const ModelParams p{5, 60};
    const auto a = survival_probability(p, 1.0, 3000, RunContext{77, 1});
    const auto b = survival_probability(p, 1.0, 3000, RunContext{77, 4});
    CHECK(a.indicator == b.indicator);
}
