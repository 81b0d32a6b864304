#include "doctest.h"

#include <cmath>

#include "spinesim/rng.hpp"
#include "spinesim/stats.hpp"

using namespace spinesim;

TEST_CASE("one-sample KS statistic")
{
    const std::vector<double> x = {0.1, 0.4, 0.7};
    auto uniform = [](double v) { return std::clamp(v, 0.0, 1.0); };
    // ECDF steps at 0.1, 0.4, 0.7 to 1/3, 2/3, 1; the largest gap is 1 - 0.7 = 0.3.
    CHECK(stats::ks_statistic(x, uniform) == doctest::Approx(0.3));
    const std::vector<double> w = {1, 1, 1};
    CHECK(stats::ks_statistic_weighted(x, w, uniform) == doctest::Approx(0.3));
    const std::vector<double> heavy = {0, 0, 1};
    CHECK(stats::ks_statistic_weighted(x, heavy, uniform) == doctest::Approx(0.7));
}

TEST_CASE("Kolmogorov distribution")
{
    CHECK(stats::kolmogorov_q(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
    CHECK(stats::kolmogorov_q(1.36) == doctest::Approx(0.0494).epsilon(1e-2));
    CHECK(stats::kolmogorov_q(0.0) == 1.0);
    CHECK(stats::ks_p_value(0.0, 100) == 1.0);
}

TEST_CASE("two-sample KS")
{
    const std::vector<double> a = {1, 2, 3, 4};
    const auto same = stats::ks_two_sample(a, a);
    CHECK(same.statistic == 0);
    CHECK(same.p_value == doctest::Approx(1.0));
    const std::vector<double> b = {5, 6, 7, 8};
    CHECK(stats::ks_two_sample(a, b).statistic == 1.0);

    Rng rng(1);
    std::vector<double> x, y, z;
    for (int i = 0; i < 5000; ++i)
    {
        x.push_back(rng.uniform());
        y.push_back(rng.uniform());
        z.push_back(rng.uniform() * 1.1);
    }
    CHECK(stats::ks_two_sample(x, y).p_value > 1e-3);
    CHECK(stats::ks_two_sample(x, z).p_value < 1e-6);
}

TEST_CASE("chi-square p-values")
{
    const std::vector<double> e = {25, 25, 25, 25};
    CHECK(stats::chi_square_p_value(e, e) == doctest::Approx(1.0));
    // Statistic (25 + 25) / 25 = 2 on 3 degrees of freedom.
    const std::vector<double> o = {30, 20, 25, 25};
    CHECK(stats::chi_square_p_value(o, e) == doctest::Approx(0.5724067).epsilon(1e-6));
}

TEST_CASE("sample summaries")
{
    const std::vector<double> x = {4, 1, 3, 2};
    CHECK(stats::quantile(x, 0.5) == 2.5);
    CHECK(stats::quantile(x, 0.0) == 1);
    CHECK(stats::quantile(x, 1.0) == 4);
    CHECK(stats::quantile(x, 0.25) == doctest::Approx(1.75));
    CHECK(stats::mean(x) == 2.5);
    CHECK(stats::variance(x) == doctest::Approx(5.0 / 3));
    const std::vector<double> y = {8, 2, 6, 4};
    CHECK(stats::correlation(x, y) == doctest::Approx(1.0));
    CHECK_THROWS(stats::quantile(std::vector<double>{}, 0.5));

    // Median standard error of N(0,1): sqrt(pi / 2n).
    Rng rng(3);
    std::vector<double> n;
    for (int i = 0; i < 40000; ++i)
    {
        const double u1 = rng.uniform_pos(), u2 = rng.uniform();
        n.push_back(std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2));
    }
    CHECK(stats::quantile_se(n, 0.5) == doctest::Approx(std::sqrt(M_PI / 2 / 40000)).epsilon(0.15));
}
