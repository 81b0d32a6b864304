#include "doctest.h"

#include <cmath>

#include "spinesim/entrance_law.hpp"
#include "spinesim/stats.hpp"

using namespace spinesim;

TEST_CASE("Gamma(2, t) CDF")
{
    CHECK(gamma2_cdf(0, 1) == 0);
    CHECK(gamma2_cdf(-1, 1) == 0);
    CHECK(gamma2_cdf(1, 1) == doctest::Approx(1 - 2 * std::exp(-1.0)));
    CHECK(gamma2_cdf(2, 0.5) == doctest::Approx(gamma2_cdf(1, 1)));
}

TEST_CASE("entrance law lengths")
{
    for (double t : {0.5, 2.0})
    {
        const auto x = entrance_lengths(t, 100000, RunContext{3, 0});
        Accumulator a;
        for (double v : x)
            a.add(v);
        CHECK(std::fabs(a.mean() - 2 / t) < 4 * a.se());
        const double ks = stats::ks_statistic(x, [t](double y) { return gamma2_cdf(y, t); });
        CHECK(stats::ks_p_value(ks, double(x.size())) > 1e-3);
    }
    Rng rng(1);
    const auto I = entrance_interval(1.0, rng);
    CHECK(I.lo <= 0);
    CHECK(I.hi >= 0);
    CHECK_THROWS(entrance_interval(0, rng));
}

TEST_CASE("planar Poisson records are consistent")
{
    Rng rng(9);
    PlanarPoisson P(2.0, rng);
    const double inf = std::numeric_limits<double>::infinity();
    double prev = 0;
    // Later times see more atoms, so the nearest one moves closer.
    for (double s : {0.1, 0.5, 1.0, 2.0})
    {
        const double e = P.endpoint(PlanarPoisson::right, s, inf);
        if (prev > 0)
            CHECK(e <= prev);
        prev = e;
    }
    CHECK(P.endpoint(PlanarPoisson::left, 0.0, 3.0) == 3.0);
    CHECK(P.endpoint(PlanarPoisson::left, 1.0, 1e-300) == 1e-300);
    const auto& recs = P.records_within(PlanarPoisson::left, 5.0);
    for (std::size_t j = 1; j < recs.size(); ++j)
    {
        CHECK(recs[j].position > recs[j - 1].position);
        CHECK(recs[j].time < recs[j - 1].time);
    }
    CHECK(recs.back().position >= 5.0);
    CHECK_THROWS(PlanarPoisson(0.0, rng));
}

TEST_CASE("nearest atom at time t is Exp(t) on each side")
{
    std::vector<double> d;
    for (int i = 0; i < 30000; ++i)
    {
        Rng rng(17, i);
        PlanarPoisson P(1.5, rng);
        d.push_back(P.endpoint(PlanarPoisson::left, 1.5, std::numeric_limits<double>::infinity()));
    }
    const double ks = stats::ks_statistic(d, [](double x) { return x > 0 ? -std::expm1(-1.5 * x) : 0.0; });
    CHECK(stats::ks_p_value(ks, double(d.size())) > 1e-3);
}

TEST_CASE("coupled paths")
{
    Rng rng(4);
    for (int i = 0; i < 100; ++i)
    {
        const auto c = poisson_coupled_path(7.0, 1.0, rng);
        CHECK(c.path.at(0.0) == Interval{0, 7});
        Interval prev{0, 7};
        for (auto const& s : c.path.states)
        {
            CHECK(prev.contains(s));
            prev = s;
        }
    }
    CHECK_THROWS(poisson_coupled_path(0.0, 1.0, rng));
}

TEST_CASE("clipping frequency matches its oracle")
{
    const auto rows = entrance_coupling_check({1.0, 5.0, 50.0}, 1.0, 40000, RunContext{2, 0});
    for (auto const& r : rows)
    {
        const double p = r.oracle;
        CHECK(std::fabs(r.coincide.mean() - p) < 4 * std::sqrt(p * (1 - p) / 40000) + 1e-9);
    }
    CHECK(coupling_oracle(1e4, 1.0) > 0.999);
    CHECK(coupling_oracle(1.0, 1.0) < coupling_oracle(5.0, 1.0));
}

TEST_CASE("Poisson construction and spine agree in law")
{
    const auto r = poisson_vs_spine_check(4.0, 0.8, 20000, RunContext{6, 0});
    CHECK(r.ks_p_value > 1e-3);
    const auto s = self_similarity_check(3.0, 2.0, 0.5, 20000, RunContext{6, 0});
    CHECK(s.ks_p_value > 1e-3);
    CHECK_THROWS(self_similarity_check(3.0, 0.0, 0.5, 10, RunContext{}));
}

TEST_CASE("rescaled spine limit moments")
{
    const auto r = rescaled_spine_limit_check(1e8, {0.5, 1.0}, 20000, RunContext{1, 0});
    for (std::size_t i = 0; i < 2; ++i)
    {
        CHECK(std::fabs(r.mean[i] - 2) < 4 * r.coordinate[i].se());
        CHECK(std::fabs(r.variance[i] - 2) < 0.15);
    }
    CHECK(std::fabs(r.correlation[0][1]) < 0.05);
    CHECK_THROWS(rescaled_spine_limit_check(1e8, {1.0, 0.5}, 10, RunContext{}));
}
