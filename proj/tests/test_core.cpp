#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "spinesim/accumulator.hpp"
#include "spinesim/core.hpp"
#include "spinesim/parallel.hpp"
#include "spinesim/rng.hpp"

using namespace spinesim;

TEST_CASE("interval basics")
{
    const auto I = make_interval(-1.5, 2.0);
    CHECK(I.length() == 3.5);
    CHECK(I.contains(Interval{-1.0, 2.0}));
    CHECK(I.contains(2.0));
    CHECK_FALSE(I.contains(Interval{-2.0, 0.0}));
    CHECK(approx_equal(Interval{0, 1}, Interval{0, 1 + 1e-12}));
    CHECK_THROWS_AS(make_interval(1, 0), std::invalid_argument);
}

namespace {

// root -> {a, b}; a -> {c, d}; b -> {e}
MarkedTree small_tree()
{
    MarkedTree t({0, 4});
    t.begin_generation();
    t.add_child(0, {0, 2});
    t.add_child(0, {2, 4});
    t.begin_generation();
    t.add_child(1, {0, 1});
    t.add_child(1, {1, 2});
    t.add_child(2, {2, 4});
    return t;
}

}  // namespace

TEST_CASE("marked tree layout and genealogy")
{
    const auto t = small_tree();
    REQUIRE(t.valid());
    CHECK(t.size() == 6);
    CHECK(t.height() == 2);
    CHECK(t.generation(2) == std::pair<NodeId, NodeId>{3, 6});
    CHECK(t.generation_size(1) == 2);
    CHECK(t.generation_size(7) == 0);
    CHECK(t.node(1).first_child == 3);
    CHECK(t.node(1).child_count == 2);

    CHECK(t.mrca(3, 4) == 1);
    CHECK(t.mrca(3, 5) == 0);
    CHECK(t.tree_distance(3, 4) == 2);
    CHECK(t.tree_distance(3, 5) == 4);
    CHECK(t.tree_distance(1, 3) == 1);
    CHECK(t.genealogical_depth(3, 4) == 1);
    CHECK(t.genealogical_depth(4, 5) == 2);
    CHECK(t.genealogical_depth(5, 5) == 0);
    CHECK_THROWS((void)t.genealogical_depth(1, 3));
    CHECK_THROWS_AS((void)t.node(99), std::out_of_range);
}

TEST_CASE("tree construction guards")
{
    MarkedTree t({0, 1});
    t.begin_generation();
    t.add_child(0, {0, 1});
    t.begin_generation();
    CHECK_THROWS_AS(t.add_child(0, {0, 1}), std::logic_error);  // parent not in previous generation
}

TEST_CASE("validity catches mark nesting violations")
{
    MarkedTree t({0, 1});
    t.begin_generation();
    t.add_child(0, {0.5, 3});
    CHECK_FALSE(t.valid());
}

TEST_CASE("ultrametric check and permutation")
{
    const auto m = SquareMatrix::from_rows({{0, 1, 2}, {1, 0, 2}, {2, 2, 0}});
    CHECK(is_ultrametric(m, 0));
    const auto bad = SquareMatrix::from_rows({{0, 1, 3}, {1, 0, 2}, {3, 2, 0}});
    CHECK_FALSE(is_ultrametric(bad, 0));
    CHECK_THROWS(SquareMatrix::from_rows({{0, 1}, {1}}));

    UltrametricMatrix u{m, {}, {10, 20, 30}};
    const std::size_t perm[] = {2, 0, 1};
    const auto p = u.permuted(perm);
    CHECK(p.d(0, 1) == 2);
    CHECK(p.d(1, 2) == 1);
    CHECK(p.marks == std::vector<double>{30, 10, 20});
}

TEST_CASE("rng streams are reproducible and distinct")
{
    Rng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
    CHECK(stream_id(1, 5) != stream_id(2, 5));

    Rng r(1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i)
    {
        const auto v = r.below(7);
        CHECK(v < 7);
        seen.insert(v);
        const double u = r.uniform_pos();
        CHECK(u > 0);
        CHECK(u <= 1);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("rng distributions have the right means")
{
    Rng r(3);
    Accumulator e, p, g;
    for (int i = 0; i < 200000; ++i)
    {
        e.add(r.exponential(2.0));
        p.add(r.poisson(1.3));
        g.add(double(r.geometric_failures(0.25)));
    }
    CHECK(std::fabs(e.mean() - 0.5) < 4 * e.se());
    CHECK(std::fabs(p.mean() - 1.3) < 4 * p.se());
    CHECK(std::fabs(g.mean() - 3.0) < 4 * g.se());
}

TEST_CASE("exact sums are independent of grouping")
{
    Rng r(9);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i)
        xs.push_back((r.uniform() - 0.5) * std::pow(10.0, double(r.below(40)) - 20));
    xs.push_back(1e150);
    xs.push_back(-1e150);

    Accumulator whole;
    for (double x : xs)
        whole.add(x);
    auto rev = xs;
    std::reverse(rev.begin(), rev.end());
    Accumulator a, b;
    for (std::size_t i = 0; i < rev.size(); ++i)
        (i % 3 ? a : b).add(rev[i]);
    b.merge(a);
    CHECK(b == whole);
    CHECK(b.sum() == whole.sum());

    ExactSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1.0);  // naive summation would lose the 1
}

TEST_CASE("accumulator statistics")
{
    Accumulator a;
    for (double x : {1.0, 2.0, 3.0, 4.0})
        a.add(x);
    CHECK(a.count() == 4);
    CHECK(a.mean() == 2.5);
    CHECK(a.variance() == doctest::Approx(5.0 / 3));
    CHECK(a.se() == doctest::Approx(std::sqrt(5.0 / 12)));
    const auto e = Estimate::from(a, 2.0);
    CHECK(e.value == 5.0);
    CHECK(e.se == doctest::Approx(2 * std::sqrt(5.0 / 12)));
    Accumulator one;
    one.add(1);
    CHECK_THROWS((void)one.variance());
    CHECK(Estimate::from(one).se == 0);
}

TEST_CASE("parallel map equals the serial reference at every thread count")
{
    auto fn = [](std::size_t i, Rng& rng) { return rng.uniform() + double(i); };
    const auto ref = map_replicates_serial<double>(1000, 5, 0x11, fn);
    for (int th : {1, 2, 3, 8})
        CHECK(map_replicates<double>(1000, RunContext{5, th}, 0x11, fn) == ref);
    CHECK(available_threads() >= 1);
}
