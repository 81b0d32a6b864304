#include "spinesim/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "spinesim/branching.hpp"
#include "spinesim/cli.hpp"
#include "spinesim/cpp_trees.hpp"
#include "spinesim/diagnostics.hpp"
#include "spinesim/entrance_law.hpp"
#include "spinesim/oracles.hpp"
#include "spinesim/report.hpp"
#include "spinesim/spine.hpp"
#include "spinesim/stats.hpp"

namespace spinesim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4)
{
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

class Battery
{
  public:
    explicit Battery(AcceptanceOptions const& o) : opt_(o) {}

    [[nodiscard]] std::size_t reps(double full, std::size_t floor = 200) const
    {
        return std::max<std::size_t>(floor, static_cast<std::size_t>(std::llround(full * opt_.scale)));
    }
    //! Factor applied to fixed tolerances on averages at reduced scale.
    [[nodiscard]] double widen() const { return opt_.scale >= 1 ? 1.0 : 1.0 / std::sqrt(opt_.scale); }
    [[nodiscard]] RunContext ctx(std::uint64_t offset) const
    {
        return {opt_.seed + offset, opt_.threads};
    }

    CriterionResult many_to_few();
    CriterionResult harmonic_martingale();
    CriterionResult entrance();
    CriterionResult poisson_vs_spine();
    CriterionResult self_similarity();
    CriterionResult spine_limit();
    CriterionResult cpp_polynomials();
    CriterionResult bijection();
    CriterionResult distance_agreement();
    void yaglom(CriterionResult& trend, CriterionResult& survival);
    CriterionResult determinism();

  private:
    AcceptanceOptions const& opt_;
};

void expect(CriterionResult& r, bool ok, std::string line)
{
    r.pass = r.pass && ok;
    r.lines.push_back((ok ? "ok   " : "FAIL ") + line);
}

CriterionResult Battery::many_to_few()
{
    CriterionResult r{1, "many-to-few exactness (R = 0)", true, {}, 0, 60, false};
    const std::size_t n = reps(1e5);
    double worst_cell = 0;
    auto cell = [&](std::uint32_t k, std::uint32_t N) {
        const double oracle = oracle::factorial_moment(oracle::critical_generation_pmf(N), k);
        ManyToFewSetup setup{k, ModelParams{0.0, N}, Harmonic::unit};
        const auto phi = const_functional();

        auto t0 = Clock::now();
        const auto lhs = Estimate::from(many_to_few_lhs(setup, phi, n, ctx(100 * k + N)).sums);
        worst_cell = std::max(worst_cell, seconds_since(t0));
        t0 = Clock::now();
        const auto rhs = Estimate::from(
            many_to_few_rhs(setup, NuDistribution::uniform(N), phi, n, ctx(100 * k + N)));
        worst_cell = std::max(worst_cell, seconds_since(t0));

        for (auto const& [side, e] : {std::pair{"lhs", lhs}, std::pair{"rhs", rhs}})
        {
            const double tol = std::max(3 * e.se, 1e-12 * oracle);
            expect(r, std::fabs(e.value - oracle) <= tol,
                   "k=" + std::to_string(k) + " N=" + std::to_string(N) + " " + side + " " +
                       fmt(e.value, 6) + " +- " + fmt(e.se, 3) + " vs oracle " + fmt(oracle, 8));
        }
    };
    for (std::uint32_t N = 2; N <= 6; ++N)
        cell(2, N);
    for (std::uint32_t N = 2; N <= 3; ++N)
        cell(3, N);
    r.lines.push_back("slowest cell " + fmt(worst_cell, 3) + " s (budget 60 s per cell)");
    r.seconds = worst_cell;  // the budget is per cell
    return r;
}

CriterionResult Battery::harmonic_martingale()
{
    CriterionResult r{2, "harmonic martingale", true, {}, 0, 120, false};
    const std::size_t n = reps(1e4);
    for (double R : {2.0, 5.0})
        for (std::uint32_t N : {50u, 200u})
        {
            ModelParams p{R, N};
            const auto mass = Estimate::from(harmonic_mass(p, N, n, ctx(N)).back());
            expect(r, std::fabs(mass.value - R) <= 3 * mass.se,
                   "R=" + fmt(R) + " N=" + std::to_string(N) + " mass " + fmt(mass.value, 5) + " +- " +
                       fmt(mass.se, 3));
        }
    return r;
}

CriterionResult Battery::entrance()
{
    CriterionResult r{3, "entrance law Gamma(2, t)", true, {}, 0, 30, false};
    const std::size_t n = reps(1e6, 1000);
    const double w = widen();
    for (double t : {0.5, 1.0, 2.0})
    {
        const auto x = entrance_lengths(t, n, ctx(static_cast<std::uint64_t>(t * 10)));
        const double m = stats::mean(x), v = stats::variance(x);
        const double ks = stats::ks_statistic(x, [t](double y) { return gamma2_cdf(y, t); });
        const double m0 = 2 / t, v0 = 2 / (t * t);
        const std::string at = "t=" + fmt(t) + " ";
        expect(r, std::fabs(m - m0) <= 0.01 * w * m0,
               at + "mean " + fmt(m, 6) + " vs " + fmt(m0) + " (tol " + fmt(w) + "%)");
        expect(r, std::fabs(v - v0) <= 0.02 * w * v0,
               at + "variance " + fmt(v, 6) + " vs " + fmt(v0) + " (tol " + fmt(2 * w) + "%)");
        expect(r, ks < 0.002 * w, at + "KS " + fmt(ks) + " < " + fmt(0.002 * w));
    }
    return r;
}

CriterionResult Battery::poisson_vs_spine()
{
    CriterionResult r{4, "Poisson construction vs spine", true, {}, 0, 120, false};
    const std::size_t n = reps(1e5);
    for (double t : {0.5, 1.0})
    {
        const auto rep = poisson_vs_spine_check(10, t, n, ctx(static_cast<std::uint64_t>(t * 10)));
        expect(r, rep.ks_p_value > 0.01,
               "R=10 t=" + fmt(t) + " KS " + fmt(rep.ks_statistic) + " p=" + fmt(rep.ks_p_value));
    }
    return r;
}

CriterionResult Battery::self_similarity()
{
    CriterionResult r{5, "self-similarity", true, {}, 0, 120, false};
    const std::size_t n = reps(1e5);
    struct Case
    {
        double R, c, t;
    };
    for (auto [R, c, t] : {Case{5, 2, 0.7}, Case{1, 10, 0.3}})
    {
        const auto rep = self_similarity_check(R, c, t, n, ctx(static_cast<std::uint64_t>(R)));
        expect(r, rep.ks_p_value > 0.01,
               "R=" + fmt(R) + " c=" + fmt(c) + " t=" + fmt(t) + " KS " + fmt(rep.ks_statistic) +
                   " p=" + fmt(rep.ks_p_value));
    }
    return r;
}

CriterionResult Battery::spine_limit()
{
    CriterionResult r{6, "rescaled spine limit", true, {}, 0, 60, false};
    const std::size_t n = reps(1e5);
    const double w = widen();
    const auto rep = rescaled_spine_limit_check(1e8, {0.5, 1.0}, n, ctx(0));
    for (std::size_t i = 0; i < 2; ++i)
    {
        const std::string at = "u=" + fmt(rep.u[i]) + " ";
        expect(r, std::fabs(rep.mean[i] - 2) <= 0.05 * w, at + "mean " + fmt(rep.mean[i], 5) + " in 2 +- " + fmt(0.05 * w));
        expect(r, std::fabs(rep.variance[i] - 2) <= 0.15 * w,
               at + "variance " + fmt(rep.variance[i], 5) + " in 2 +- " + fmt(0.15 * w));
    }
    const double rho = rep.correlation[0][1];
    expect(r, std::fabs(rho) < 0.05 * w, "correlation " + fmt(rho) + " within " + fmt(0.05 * w));
    return r;
}

CriterionResult Battery::cpp_polynomials()
{
    CriterionResult r{7, "Brownian CPP polynomials", true, {}, 0, 30, false};
    const std::size_t n = reps(1e6, 1000);
    const auto nu = CppMeasure::brownian();
    for (double a : {0.25, 0.5, 0.75})
    {
        const auto e = cpp_polynomial(nu, 1.0, 2, dist_indicator(a), n, ctx(static_cast<std::uint64_t>(a * 100))).estimate();
        expect(r, std::fabs(e.value - 2 * a) <= 3 * e.se,
               "a=" + fmt(a) + " estimate " + fmt(e.value, 6) + " +- " + fmt(e.se, 3) + " vs " + fmt(2 * a));
    }
    double factorial = 1;
    for (std::uint32_t k = 1; k <= 4; ++k)
    {
        factorial *= k;
        const auto e = cpp_polynomial(nu, 1.0, k, const_functional(), reps(1e4), ctx(k)).estimate();
        expect(r, e.value == factorial && e.se == 0,
               "phi=1 k=" + std::to_string(k) + " gives " + fmt(e.value, 17) + " (se " + fmt(e.se) + ")");
    }
    return r;
}

CriterionResult Battery::bijection()
{
    CriterionResult r{8, "CPP encoding bijection", true, {}, 0, 5, false};
    const std::size_t n = reps(1e4);
    auto outcomes = map_replicates<int>(n, ctx(0), 0xB1, [](std::size_t, Rng& rng) {
        const auto N = static_cast<std::uint32_t>(1 + rng.below(64));
        const auto leaves = 1 + rng.below(12);
        CppEncoding enc{double(N), {}};
        for (std::uint64_t i = 0; i + 1 < leaves; ++i)
            enc.times.push_back(double(rng.below(N)));
        const auto m = phi_decode(enc);
        if (!is_ultrametric(m.d, 0.0))
            return 1;
        const auto back = phi_encode(m, N);
        return back.times == enc.times && back.height == enc.height ? 0 : 2;
    });
    const auto bad_ultra = std::count(outcomes.begin(), outcomes.end(), 1);
    const auto bad_round = std::count(outcomes.begin(), outcomes.end(), 2);
    expect(r, bad_ultra == 0, std::to_string(n) + " encodings, non-ultrametric decodes: " + std::to_string(bad_ultra));
    expect(r, bad_round == 0, "roundtrip mismatches: " + std::to_string(bad_round));
    return r;
}

CriterionResult Battery::distance_agreement()
{
    CriterionResult r{9, "distance agreement", true, {}, 0, 120, false};
    const std::size_t n = reps(1e4);
    double prev_width = std::numeric_limits<double>::infinity();
    for (double R : {1e2, 1e4, 1e6})
    {
        const auto rep = distance_agreement_check(2, R, n, ctx(static_cast<std::uint64_t>(std::log10(R))));
        expect(r, rep.width90() < prev_width,
               "R=" + fmt(R) + " median " + fmt(rep.median) + " 90% width " + fmt(rep.width90()) +
                   " (must shrink)");
        prev_width = rep.width90();
        if (R == 1e6)
            expect(r, rep.median >= 0.9 && rep.median <= 1.1,
                   "R=1e6 median " + fmt(rep.median) + " in [0.9, 1.1]");
    }
    return r;
}

void Battery::yaglom(CriterionResult& trend, CriterionResult& survival)
{
    struct Point
    {
        double R;
        std::uint32_t N;
        double full_reps;
    };
    // Per-run cost is roughly 0.2, 1.4 and 5 ms; replicates follow
    // n ~ 1/sqrt(cost) on the two expensive points, about 12 min in total.
    const Point grid[] = {{20, 400, 240'000}, {50, 1000, 180'000}, {100, 2000, 95'000}};
    std::vector<YaglomPoint> pts;
    for (auto const& g : grid)
    {
        pts.push_back(yaglom_point(ModelParams{g.R, g.N}, 1.0, reps(g.full_reps), ctx(g.N)));
        auto const& y = pts.back();
        const auto sr = y.survival_ratio();
        std::string line = "R=" + fmt(g.R) + " N=" + std::to_string(g.N) + " runs " +
                           std::to_string(y.replicates) + " survivors " +
                           std::to_string(y.mass_ratio.count()) + " capped " + std::to_string(y.capped);
        trend.lines.push_back("info " + line + ": mark mean " + fmt(y.mark_mean.mean()) + " +- " +
                              fmt(y.mark_mean.se(), 2) + ", KS " + fmt(y.mark_ks) + ", mass ratio " +
                              fmt(y.mass_ratio.mean()) + " +- " + fmt(y.mass_ratio.se(), 2));
        survival.lines.push_back("info " + line + ": N log R P / R = " + fmt(sr.value) + " +- " + fmt(sr.se, 2));
    }
    auto const& last = pts.back();
    expect(trend, std::fabs(last.mark_mean.mean() - 1) <= 0.15,
           "largest point mark mean " + fmt(last.mark_mean.mean()) + " within 15% of 1");
    for (std::size_t i = 1; i < pts.size(); ++i)
    {
        const std::string step = "step " + std::to_string(i) + ": ";
        expect(trend, pts[i].mark_ks <= pts[i - 1].mark_ks,
               step + "KS " + fmt(pts[i - 1].mark_ks) + " -> " + fmt(pts[i].mark_ks) + " nonincreasing");
        const double a = std::fabs(pts[i - 1].mass_ratio.mean() - 1), b = std::fabs(pts[i].mass_ratio.mean() - 1);
        expect(trend, b < a,
               step + "mass ratio " + fmt(pts[i - 1].mass_ratio.mean()) + " -> " + fmt(pts[i].mass_ratio.mean()) +
                   " approaches 1");
        const double sa = std::fabs(pts[i - 1].survival_ratio().value - 1);
        const double sb = std::fabs(pts[i].survival_ratio().value - 1);
        expect(survival, sb < sa,
               step + "survival ratio " + fmt(pts[i - 1].survival_ratio().value) + " -> " +
                   fmt(pts[i].survival_ratio().value) + " approaches 1");
    }
}

CriterionResult Battery::determinism()
{
    CriterionResult r{12, "determinism across runs and thread counts", true, {}, 0, 0, false};
    const std::vector<std::vector<std::string>> commands = {
        {"simulate", "--R", "0", "--N", "100", "--reps", "20000"},
        {"simulate", "--R", "3", "--N", "60", "--reps", "2000", "--assert"},
        {"spine", "--check", "convergence", "--R", "5", "--N", "100", "--reps", "5000"},
        {"spine", "--check", "poisson", "--reps", "2000"},
        {"spine", "--check", "self-similar", "--reps", "2000"},
        {"spine", "--check", "limit", "--reps", "5000"},
        {"verify-m2f", "--k", "2", "--N", "3", "--R", "2", "--reps", "3000", "--phi", "battery"},
        {"cpp-poly", "--k", "3", "--reps", "50000"},
        {"entrance", "--t", "1", "--reps", "50000"},
        {"yaglom", "--grid", "5:40,8:80", "--reps", "400"},
        {"distance-agree", "--reps", "500"},
        {"selftest", "--only", "8", "--scale", "0.05"},
    };
    const int threads[] = {1, 1, 2, 3, 8};
    for (auto const& base : commands)
    {
        for (std::string format : {"csv", "jsonl"})
        {
            std::string first;
            bool same = true;
            for (int th : threads)
            {
                auto args = base;
                args.insert(args.end(), {"--seed", "11", "--threads", std::to_string(th), "--format", format});
                std::ostringstream out, err;
                const int code = cli::run(args, out, err);
                if (code == cli::usage_error)
                {
                    same = false;
                    r.lines.push_back("FAIL usage error: " + err.str());
                    break;
                }
                if (first.empty())
                    first = out.str();
                else if (out.str() != first)
                    same = false;
            }
            expect(r, same && !first.empty(), base[0] + (base.size() > 2 ? " " + base[1] + " " + base[2] : "") +
                                                  " [" + format + "] identical at threads 1,1,2,3,8");
        }
    }
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(AcceptanceOptions const& options)
{
    Battery b(options);
    auto wanted = [&](int id) {
        return options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end();
    };
    std::vector<CriterionResult> out;
    auto finish = [&](CriterionResult r, Clock::time_point t0, bool per_cell = false) {
        if (!per_cell)
            r.seconds = seconds_since(t0);
        if (r.budget_seconds > 0 && r.seconds > r.budget_seconds)
        {
            r.over_budget = true;
            if (options.enforce_budgets)
                r.pass = false;
        }
        if (options.progress)
            *options.progress << "criterion " << r.id << (r.pass ? " pass" : " FAIL") << " in "
                              << fmt(seconds_since(t0), 3) << " s" << std::endl;
        out.push_back(std::move(r));
    };
    using Member = CriterionResult (Battery::*)();
    const std::pair<int, Member> simple[] = {
        {1, &Battery::many_to_few},      {2, &Battery::harmonic_martingale}, {3, &Battery::entrance},
        {4, &Battery::poisson_vs_spine}, {5, &Battery::self_similarity},     {6, &Battery::spine_limit},
        {7, &Battery::cpp_polynomials},  {8, &Battery::bijection},           {9, &Battery::distance_agreement},
    };
    for (auto [id, fn] : simple)
        if (wanted(id))
        {
            const auto t0 = Clock::now();
            finish((b.*fn)(), t0, id == 1);
        }
    if (wanted(10) || wanted(11))
    {
        CriterionResult trend{10, "Yaglom trend", true, {}, 0, 900, false};
        CriterionResult surv{11, "survival asymptotics", true, {}, 0, 0, false};
        const auto t0 = Clock::now();
        b.yaglom(trend, surv);
        trend.lines.push_back("runs shared by criteria 10 and 11");
        if (wanted(10))
            finish(std::move(trend), t0);
        if (wanted(11))
            finish(std::move(surv), t0);
    }
    if (wanted(12))
    {
        const auto t0 = Clock::now();
        finish(b.determinism(), t0);
    }
    return out;
}

}  // namespace spinesim
