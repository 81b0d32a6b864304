#include "spinesim/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "spinesim/acceptance.hpp"
#include "spinesim/branching.hpp"
#include "spinesim/cpp_trees.hpp"
#include "spinesim/diagnostics.hpp"
#include "spinesim/entrance_law.hpp"
#include "spinesim/oracles.hpp"
#include "spinesim/report.hpp"
#include "spinesim/spine.hpp"
#include "spinesim/stats.hpp"

namespace spinesim::cli {

namespace {

using json = nlohmann::json;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Keys accepted in a config file; flags use the same names with '-' for '_'.
const std::set<std::string> kKeys = {"R",      "N",     "k",    "t",      "c",      "u",     "reps",
                                     "seed",   "threads", "node_cap", "out", "format", "assert",
                                     "phi",    "grid",  "R_list", "check", "scale",  "only",  "mutate"};

// Keys that do not influence the numbers and are left out of the recorded config.
const std::set<std::string> kUnrecorded = {"threads", "out", "format"};

class Config
{
  public:
    explicit Config(json values) : v_(std::move(values)) {}

    template <class T>
    T get(std::string const& key, T fallback)
    {
        if (!v_.contains(key))
            v_[key] = fallback;
        try
        {
            T value = v_[key].get<T>();
            v_[key] = value;  // canonical form, so file and flag inputs record alike
            return value;
        }
        catch (json::exception const&)
        {
            throw UsageError("invalid value for '" + key + "': " + v_[key].dump());
        }
    }
    [[nodiscard]] bool has(std::string const& key) const { return v_.contains(key); }

    [[nodiscard]] json recorded() const
    {
        json r = json::object();
        for (auto const& [k, val] : v_.items())
            if (!kUnrecorded.count(k))
                r[k] = val;
        return r;
    }

  private:
    json v_;
};

std::vector<std::string> split(std::string const& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty())
            out.push_back(item);
    return out;
}

double to_double(std::string const& s, std::string const& what)
{
    try
    {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used == s.size())
            return x;
    }
    catch (std::exception const&)
    {
    }
    throw UsageError("cannot parse " + what + " value '" + s + "'");
}

std::string num(double x)
{
    return format_number(x);
}

double tolerance_widening(std::uint64_t reps, double full)
{
    return reps >= full ? 1.0 : std::sqrt(full / double(reps));
}

bool within(double value, double target, double tol)
{
    return std::fabs(value - target) <= tol;
}

std::string pm(Estimate const& e)
{
    return num(e.value) + " +- " + num(e.se);
}

// ---------------------------------------------------------------- subcommands

struct Common
{
    RunContext ctx;
    std::uint64_t reps = 0;
    bool assert_mode = false;
};

void cmd_simulate(Config& cfg, Common const& c, Report& rep)
{
    ModelParams p{cfg.get<double>("R", 0.0), cfg.get<std::uint32_t>("N", 100),
                  cfg.get<std::size_t>("node_cap", 10'000'000)};
    p.validate();
    const double t = cfg.get<double>("t", 1.0);
    const std::uint32_t H = p.horizon(t);
    const std::string pt = "R=" + num(p.R) + ";N=" + std::to_string(p.N) + ";t=" + num(t);

    const auto surv = survival_probability(p, t, c.reps, c.ctx);
    const auto P = Estimate::from(surv.indicator);
    std::optional<double> oracle;
    if (p.R == 0)
        oracle = oracle::critical_survival(H);
    rep.add(pt, "survival", P, oracle);
    rep.add(pt, "cap_exceeded", double(surv.cap_exceeded) / double(c.reps), std::nan(""), c.reps);
    if (p.R > 1 && P.value > 0)
    {
        const double f = p.N * std::log(p.R) / p.R;
        rep.add(pt, "survival_ratio", P.value * f, P.se * f, P.count, 1.0);
    }
    const auto mass = Estimate::from(harmonic_mass(p, H, c.reps, c.ctx).back());
    rep.add(pt, "mass", mass, p.R);

    if (!c.assert_mode)
        return;
    if (oracle)
        rep.check("survival_matches_oracle", within(P.value, *oracle, 3 * P.se),
                  pm(P) + " vs " + num(*oracle));
    rep.check("harmonic_mass", within(mass.value, p.R, std::max(3 * mass.se, 1e-12)),
              pm(mass) + " vs " + num(p.R));
}

void add_two_sample(Report& rep, std::string const& pt, TwoSampleReport const& r, std::string const& a,
                    std::string const& b)
{
    rep.add(pt, "mean_" + a, Estimate::from(r.mean_a));
    rep.add(pt, "mean_" + b, Estimate::from(r.mean_b));
    rep.add(pt, "ks_statistic", r.ks_statistic, std::nan(""), r.a.size() + r.b.size());
    rep.add(pt, "ks_p_value", r.ks_p_value, std::nan(""), r.a.size() + r.b.size());
}

void cmd_spine(Config& cfg, Common const& c, Report& rep)
{
    const auto check = cfg.get<std::string>("check", "convergence");
    if (check == "convergence")
    {
        const double R = cfg.get<double>("R", 5.0);
        const auto N = cfg.get<std::uint32_t>("N", 100);
        const double t = cfg.get<double>("t", 1.0);
        const auto r = spine_discrete_converges_check({0.0, R}, N, t, c.reps, c.ctx);
        const std::string pt = "R=" + num(R) + ";N=" + std::to_string(N) + ";t=" + num(t);
        rep.add(pt, "mean_discrete", Estimate::from(r.discrete));
        rep.add(pt, "mean_continuous", Estimate::from(r.continuous));
        rep.add(pt, "ks_statistic", r.ks_statistic, std::nan(""), 2 * c.reps);
        rep.add(pt, "ks_p_value", r.ks_p_value, std::nan(""), 2 * c.reps);
        if (c.assert_mode)
            rep.check("discrete_matches_continuous", r.ks_p_value > 0.01, "p=" + num(r.ks_p_value));
    }
    else if (check == "poisson")
    {
        const double R = cfg.get<double>("R", 10.0);
        const double t = cfg.get<double>("t", 1.0);
        const auto r = poisson_vs_spine_check(R, t, c.reps, c.ctx);
        add_two_sample(rep, "R=" + num(R) + ";t=" + num(t), r, "poisson", "spine");
        if (c.assert_mode)
            rep.check("poisson_matches_spine", r.ks_p_value > 0.01, "p=" + num(r.ks_p_value));
    }
    else if (check == "self-similar")
    {
        const double R = cfg.get<double>("R", 5.0);
        const double s = cfg.get<double>("c", 2.0);
        const double t = cfg.get<double>("t", 0.7);
        const auto r = self_similarity_check(R, s, t, c.reps, c.ctx);
        add_two_sample(rep, "R=" + num(R) + ";c=" + num(s) + ";t=" + num(t), r, "scaled", "direct");
        if (c.assert_mode)
            rep.check("self_similar", r.ks_p_value > 0.01, "p=" + num(r.ks_p_value));
    }
    else if (check == "limit")
    {
        const double R = cfg.get<double>("R", 1e8);
        std::vector<double> u;
        for (auto const& s : split(cfg.get<std::string>("u", "0.5,1"), ','))
            u.push_back(to_double(s, "u"));
        const auto r = rescaled_spine_limit_check(R, u, c.reps, c.ctx);
        const double w = tolerance_widening(c.reps, 1e5);
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            const std::string pt = "R=" + num(R) + ";u=" + num(u[i]);
            rep.add(pt, "mean", Estimate::from(r.coordinate[i]), 2.0);
            rep.add(pt, "variance", r.variance[i], std::nan(""), c.reps, 2.0);
            if (c.assert_mode)
            {
                rep.check("mean_u=" + num(u[i]), within(r.mean[i], 2, 0.05 * w), num(r.mean[i]));
                rep.check("variance_u=" + num(u[i]), within(r.variance[i], 2, 0.15 * w), num(r.variance[i]));
            }
        }
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = i + 1; j < u.size(); ++j)
            {
                const double rho = r.correlation[i][j];
                const double se = c.reps > 3 ? (1 - rho * rho) / std::sqrt(double(c.reps) - 3) : std::nan("");
                rep.add("R=" + num(R) + ";u=" + num(u[i]) + "," + num(u[j]), "correlation", rho, se, c.reps, 0.0);
                if (c.assert_mode)
                    rep.check("uncorrelated", std::fabs(rho) < 0.05 * w, num(rho));
            }
    }
    else
        throw UsageError("unknown --check '" + check + "' (convergence, poisson, self-similar, limit)");
}

void cmd_verify_m2f(Config& cfg, Common const& c, Report& rep)
{
    ManyToFewSetup setup;
    setup.k = cfg.get<std::uint32_t>("k", 2);
    setup.params = ModelParams{cfg.get<double>("R", 0.0), cfg.get<std::uint32_t>("N", 2),
                               cfg.get<std::size_t>("node_cap", 10'000'000)};
    setup.params.validate();
    setup.harmonic = default_harmonic(setup.params.R);
    if (setup.k == 0)
        throw UsageError("--k must be >= 1");
    DeltaOptions dopt;
    dopt.harmonic = setup.harmonic;
    dopt.drop_degree_factorial = cfg.get<bool>("mutate", false);

    const auto phi_spec = cfg.get<std::string>("phi", "const");
    std::vector<TestFunctional> battery;
    if (phi_spec == "battery")
        battery = default_battery(setup.params.N);
    else
        battery.push_back(parse_functional(phi_spec));

    const auto nu = default_nu(setup.params.N, setup.params.R);
    const std::string base = "R=" + num(setup.params.R) + ";N=" + std::to_string(setup.params.N) +
                             ";k=" + std::to_string(setup.k);
    for (auto const& phi : battery)
    {
        const std::string pt = base + ";phi=" + phi.name;
        const auto lhs_raw = many_to_few_lhs(setup, phi, c.reps, c.ctx);
        const auto lhs = Estimate::from(lhs_raw.sums);
        const auto rhs = Estimate::from(many_to_few_rhs(setup, nu, phi, c.reps, c.ctx, dopt));
        std::optional<double> oracle;
        if (setup.params.R == 0 && phi.name == "const")
            oracle = oracle::factorial_moment(oracle::critical_generation_pmf(setup.params.N), setup.k);
        rep.add(pt, "lhs", lhs, oracle);
        rep.add(pt, "rhs", rhs, oracle);
        const double se = std::hypot(lhs.se, rhs.se);
        rep.add(pt, "diff", lhs.value - rhs.value, se, std::min(lhs.count, rhs.count), 0.0);
        rep.add(pt, "lhs_subsampled", double(lhs_raw.subsampled), std::nan(""), c.reps);
        rep.add(pt, "lhs_cap_exceeded", double(lhs_raw.cap_exceeded), std::nan(""), c.reps);
        if (!c.assert_mode)
            continue;
        const double slack = 1e-12 * std::max(1.0, std::fabs(rhs.value));
        rep.check("lhs_equals_rhs[" + phi.name + "]", std::fabs(lhs.value - rhs.value) <= 3 * se + slack,
                  pm(lhs) + " vs " + pm(rhs));
        if (oracle)
            for (auto const& [side, e] : {std::pair{"lhs", lhs}, std::pair{"rhs", rhs}})
                rep.check(std::string(side) + "_matches_oracle", within(e.value, *oracle, 3 * e.se + slack),
                          pm(e) + " vs " + num(*oracle));
    }
}

void cmd_cpp_poly(Config& cfg, Common const& c, Report& rep)
{
    const auto k = cfg.get<std::uint32_t>("k", 2);
    if (k == 0)
        throw UsageError("--k must be >= 1");
    const auto phi = parse_functional(cfg.get<std::string>("phi", "dist_indicator(0.5)"));
    const auto e = cpp_polynomial(CppMeasure::brownian(), 1.0, k, phi, c.reps, c.ctx).estimate();
    double fact = 1;
    for (std::uint32_t i = 2; i <= k; ++i)
        fact *= i;
    std::optional<double> ref;
    if (phi.name == "const")
        ref = fact;
    else if (k == 2 && phi.name.rfind("dist_indicator(", 0) == 0)
        ref = 2 * std::clamp(to_double(phi.name.substr(15, phi.name.size() - 16), "a"), 0.0, 1.0);
    const std::string pt = "brownian;k=" + std::to_string(k) + ";phi=" + phi.name;
    rep.add(pt, "polynomial", e, ref);
    if (c.assert_mode && ref)
    {
        const bool ok = phi.name == "const" ? (e.value == *ref && e.se == 0) : within(e.value, *ref, 3 * e.se);
        rep.check("polynomial_matches_reference", ok, pm(e) + " vs " + num(*ref));
    }
}

void cmd_entrance(Config& cfg, Common const& c, Report& rep)
{
    const double t = cfg.get<double>("t", 1.0);
    const double R = cfg.get<double>("R", 1e4);
    const auto x = entrance_lengths(t, c.reps, c.ctx);
    Accumulator acc;
    for (double v : x)
        acc.add(v);
    const double mean = acc.mean();
    double m4 = 0;
    for (double v : x)
        m4 += std::pow(v - mean, 4);
    m4 /= double(x.size());
    const double var = stats::variance(x);
    const double var_se = std::sqrt(std::max(0.0, m4 - var * var) / double(x.size()));
    const double ks = stats::ks_statistic(x, [t](double y) { return gamma2_cdf(y, t); });

    const std::string pt = "t=" + num(t);
    rep.add(pt, "length_mean", Estimate::from(acc), 2 / t);
    rep.add(pt, "length_variance", var, var_se, x.size(), 2 / (t * t));
    rep.add(pt, "ks_statistic", ks, std::nan(""), x.size(), 0.0);
    rep.add(pt, "ks_p_value", stats::ks_p_value(ks, double(x.size())), std::nan(""), x.size());

    const auto coupling = entrance_coupling_check({R}, t, c.reps, c.ctx).front();
    const auto freq = Estimate::from(coupling.coincide);
    rep.add("R=" + num(R) + ";t=" + num(t), "coupling_coincidence", freq, coupling.oracle);

    if (!c.assert_mode)
        return;
    const double w = tolerance_widening(c.reps, 1e6);
    rep.check("mean", within(mean, 2 / t, 0.01 * w * 2 / t), num(mean));
    rep.check("variance", within(var, 2 / (t * t), 0.02 * w * 2 / (t * t)), num(var));
    rep.check("ks", ks < 0.002 * w, num(ks) + " < " + num(0.002 * w));
    const double p = coupling.oracle;
    const double binom_se = std::sqrt(p * (1 - p) / double(c.reps));
    rep.check("coupling_matches_oracle", within(freq.value, p, 3 * binom_se + 1.0 / double(c.reps)),
              num(freq.value) + " vs " + num(p));
}

struct GridPoint
{
    double R;
    std::uint32_t N;
};

std::vector<GridPoint> parse_grid(std::string const& s)
{
    std::vector<GridPoint> g;
    for (auto const& item : split(s, ','))
    {
        const auto parts = split(item, ':');
        if (parts.size() != 2)
            throw UsageError("grid entries are R:N, got '" + item + "'");
        const double N = to_double(parts[1], "grid N");
        if (!(N >= 1) || N != std::floor(N) || N > 4e9)
            throw UsageError("grid N must be a positive integer, got '" + parts[1] + "'");
        g.push_back({to_double(parts[0], "grid R"), static_cast<std::uint32_t>(N)});
    }
    if (g.empty())
        throw UsageError("empty grid");
    return g;
}

void cmd_yaglom(Config& cfg, Common const& c, Report& rep)
{
    const double t = cfg.get<double>("t", 1.0);
    const auto cap = cfg.get<std::size_t>("node_cap", 10'000'000);
    const auto grid = parse_grid(cfg.get<std::string>("grid", "20:400,50:1000,100:2000"));
    std::vector<YaglomPoint> pts;
    for (auto const& g : grid)
    {
        ModelParams p{g.R, g.N, cap};
        p.validate();
        if (!(g.R > 1))
            throw UsageError("yaglom needs R > 1");
        pts.push_back(yaglom_point(p, t, c.reps, c.ctx));
        auto const& y = pts.back();
        const std::string pt = "R=" + num(g.R) + ";N=" + std::to_string(g.N) + ";t=" + num(t);
        const auto survivors = y.mass_ratio.count();
        rep.add(pt, "survival", Estimate::from(y.survival));
        rep.add(pt, "survival_ratio", y.survival_ratio(), 1.0);
        rep.add(pt, "capped", double(y.capped), std::nan(""), y.replicates);
        if (survivors == 0)
            continue;
        rep.add(pt, "mass_ratio", Estimate::from(y.mass_ratio), 1.0);
        rep.add(pt, "mark_mean", Estimate::from(y.mark_mean), 1.0 / t);
        rep.add(pt, "mark_ks", y.mark_ks, std::nan(""), survivors, 0.0);
        const double rho = y.chaos_correlation;
        rep.add(pt, "chaos_correlation", rho,
                survivors > 3 ? (1 - rho * rho) / std::sqrt(double(survivors) - 3) : std::nan(""), survivors,
                0.0);
    }
    if (!c.assert_mode)
        return;
    for (auto const& y : pts)
        if (y.mass_ratio.count() < 2)
            throw UsageError("too few surviving runs for assertions; raise --reps");
    auto const& last = pts.back();
    rep.check("mark_mean_largest_point", within(last.mark_mean.mean(), 1 / t, 0.15 / t), num(last.mark_mean.mean()));
    for (std::size_t i = 1; i < pts.size(); ++i)
    {
        const std::string s = "_step" + std::to_string(i);
        rep.check("ks_nonincreasing" + s, pts[i].mark_ks <= pts[i - 1].mark_ks,
                  num(pts[i - 1].mark_ks) + " -> " + num(pts[i].mark_ks));
        const double m0 = pts[i - 1].mass_ratio.mean(), m1 = pts[i].mass_ratio.mean();
        rep.check("mass_ratio_improves" + s, std::fabs(m1 - 1) < std::fabs(m0 - 1), num(m0) + " -> " + num(m1));
        const double s0 = pts[i - 1].survival_ratio().value, s1 = pts[i].survival_ratio().value;
        rep.check("survival_ratio_improves" + s, std::fabs(s1 - 1) < std::fabs(s0 - 1), num(s0) + " -> " + num(s1));
    }
}

void cmd_distance(Config& cfg, Common const& c, Report& rep)
{
    const auto k = cfg.get<std::uint32_t>("k", 2);
    if (k < 2)
        throw UsageError("distance agreement needs --k >= 2");
    std::vector<double> Rs;
    if (cfg.has("R"))
        Rs.push_back(cfg.get<double>("R", 0.0));
    else
        for (auto const& s : split(cfg.get<std::string>("R_list", "1e2,1e4,1e6"), ','))
            Rs.push_back(to_double(s, "R_list"));
    std::vector<DistanceAgreement> all;
    for (double R : Rs)
    {
        all.push_back(distance_agreement_check(k, R, c.reps, c.ctx));
        auto const& d = all.back();
        const std::string pt = "R=" + num(R) + ";k=" + std::to_string(k);
        const auto n = d.ratios.size();
        rep.add(pt, "mean", Estimate::from(d.mean));
        for (auto [name, q, v] : {std::tuple{"q05", 0.05, d.q05}, std::tuple{"q25", 0.25, d.q25},
                                  std::tuple{"median", 0.5, d.median}, std::tuple{"q75", 0.75, d.q75},
                                  std::tuple{"q95", 0.95, d.q95}})
            rep.add(pt, name, v, stats::quantile_se(d.ratios, q), n, std::string(name) == "median" ? std::optional(1.0) : std::nullopt);
        rep.add(pt, "iqr", d.iqr(), std::nan(""), n);
        rep.add(pt, "width90", d.width90(), std::nan(""), n);
    }
    if (!c.assert_mode)
        return;
    rep.check("median_at_largest_R", all.back().median >= 0.9 && all.back().median <= 1.1, num(all.back().median));
    for (std::size_t i = 1; i < all.size(); ++i)
        rep.check("width90_shrinks_step" + std::to_string(i), all[i].width90() < all[i - 1].width90(),
                  num(all[i - 1].width90()) + " -> " + num(all[i].width90()));
}

void cmd_selftest(Config& cfg, Common const& c, Report& rep, std::ostream& err)
{
    AcceptanceOptions opt;
    opt.scale = cfg.get<double>("scale", 0.05);
    if (!(opt.scale > 0) || opt.scale > 1)
        throw UsageError("--scale must be in (0, 1]");
    opt.seed = c.ctx.seed;
    opt.threads = c.ctx.threads;
    opt.progress = &err;
    for (auto const& s : split(cfg.get<std::string>("only", ""), ','))
    {
        const double id = to_double(s, "only");
        if (id < 1 || id > kCriterionCount || id != std::floor(id))
            throw UsageError("--only takes criterion numbers 1.." + std::to_string(kCriterionCount));
        opt.only.push_back(static_cast<int>(id));
    }
    for (auto const& r : run_acceptance(opt))
    {
        std::string detail;
        for (auto const& l : r.lines)
            detail += (detail.empty() ? "" : "; ") + l;
        const std::string pt = "criterion=" + std::to_string(r.id);
        rep.add(pt, "pass", r.pass ? 1.0 : 0.0, std::nan(""), 1);
        rep.check("criterion_" + std::to_string(r.id) + " " + r.title, r.pass, detail);
    }
}

}  // namespace

int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Branching process with recombination: spine simulations and diagnostics", "spinesim"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);

    double R = 0, t = 0, c = 0, scale = 0;
    std::uint32_t N = 0, k = 0;
    std::uint64_t reps = 0, seed = 0, node_cap = 0;
    int threads = 0;
    std::string out_path, format, config_path, phi, grid, R_list, check, u, only;
    bool assert_flag = false, mutate = false;

    std::map<std::string, CLI::Option*> flags;
    flags["R"] = app.add_option("--R", R, "Root interval length");
    flags["N"] = app.add_option("--N", N, "Time scale / horizon in generations");
    flags["k"] = app.add_option("--k", k, "Number of sampled individuals / spines");
    flags["t"] = app.add_option("--t", t, "Rescaled time");
    flags["c"] = app.add_option("--c", c, "Self-similarity scaling constant");
    flags["u"] = app.add_option("--u", u, "Comma-separated rescaled times (spine --check limit)");
    flags["reps"] = app.add_option("--reps", reps, "Replicates (per side / per grid point)");
    flags["seed"] = app.add_option("--seed", seed, "Master seed");
    flags["threads"] = app.add_option("--threads", threads, "Worker threads (0: all available)");
    flags["node_cap"] = app.add_option("--node-cap", node_cap, "Per-generation population cap");
    flags["out"] = app.add_option("--out", out_path, "Output file (default: stdout)");
    flags["format"] = app.add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    flags["assert"] = app.add_flag("--assert", assert_flag, "Turn diagnostics into pass/fail checks");
    flags["phi"] = app.add_option("--phi", phi, "Test functional: const, dist_indicator(a), mark_power(p,cap), battery");
    flags["grid"] = app.add_option("--grid", grid, "Yaglom grid as R:N,R:N,...");
    flags["R_list"] = app.add_option("--R-list", R_list, "Comma-separated R values (distance-agree)");
    flags["check"] = app.add_option("--check", check, "spine: convergence, poisson, self-similar, limit");
    flags["scale"] = app.add_option("--scale", scale, "selftest replicate scale in (0, 1]");
    flags["only"] = app.add_option("--only", only, "selftest: comma-separated criterion numbers");
    flags["mutate"] = app.add_flag("--mutate", mutate)->group("");  // drops 1/d! in the spine bias
    app.add_option("--config", config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);

    const std::pair<const char*, const char*> subs[] = {
        {"simulate", "Forward simulation: survival probability and harmonic mass"},
        {"spine", "Spine path checks"},
        {"verify-m2f", "Many-to-few formula: forward lhs against spine rhs"},
        {"cpp-poly", "Brownian coalescent point process polynomials"},
        {"entrance", "Entrance law and Poisson coupling"},
        {"yaglom", "Conditioned population at time tN over an (R, N) grid"},
        {"distance-agree", "Genealogical versus chromosomic distance"},
        {"selftest", "Acceptance battery at reduced replicate counts"},
    };
    for (auto [name, help] : subs)
        app.add_subcommand(name, help);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try
    {
        app.parse(rev);
    }
    catch (CLI::CallForHelp const& e)
    {
        app.exit(e, out, err);
        return ok;
    }
    catch (CLI::CallForVersion const& e)
    {
        out << kVersion << "\n";
        return ok;
    }
    catch (CLI::ParseError const& e)
    {
        app.exit(e, out, err);
        return usage_error;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try
    {
        json values = json::object();
        if (!config_path.empty())
        {
            std::ifstream in(config_path);
            json file;
            try
            {
                file = json::parse(in);
            }
            catch (json::exception const& e)
            {
                throw UsageError("config file is not valid JSON: " + std::string(e.what()));
            }
            if (!file.is_object())
                throw UsageError("config file must hold a JSON object");
            for (auto const& [key, val] : file.items())
            {
                std::string norm = key;
                std::replace(norm.begin(), norm.end(), '-', '_');
                if (norm == "node-cap")
                    norm = "node_cap";
                if (!kKeys.count(norm))
                    throw UsageError("unknown config key '" + key + "'");
                values[norm] = val;
            }
        }
        auto set = [&](std::string const& key, auto const& v) {
            if (flags.at(key)->count() > 0)
                values[key] = v;
        };
        set("R", R);
        set("N", N);
        set("k", k);
        set("t", t);
        set("c", c);
        set("u", u);
        set("reps", reps);
        set("seed", seed);
        set("threads", threads);
        set("node_cap", node_cap);
        set("out", out_path);
        set("format", format);
        set("assert", assert_flag);
        set("phi", phi);
        set("grid", grid);
        set("R_list", R_list);
        set("check", check);
        set("scale", scale);
        set("only", only);
        set("mutate", mutate);

        Config cfg(values);
        const std::map<std::string, std::uint64_t> default_reps = {
            {"simulate", 10'000}, {"spine", 100'000},      {"verify-m2f", 100'000}, {"cpp-poly", 1'000'000},
            {"entrance", 1'000'000}, {"yaglom", 2'000}, {"distance-agree", 10'000}, {"selftest", 0}};
        Common common;
        common.ctx.seed = cfg.get<std::uint64_t>("seed", 1);
        common.ctx.threads = cfg.get<int>("threads", 0);
        if (common.ctx.threads < 0)
            throw UsageError("--threads must be >= 0");
        if (sub != "selftest")
        {
            common.reps = cfg.get<std::uint64_t>("reps", default_reps.at(sub));
            if (common.reps < 2)
                throw UsageError("--reps must be at least 2");
        }
        common.assert_mode = cfg.get<bool>("assert", false);
        const auto fmt_name = cfg.get<std::string>("format", "csv");
        if (fmt_name != "csv" && fmt_name != "jsonl")
            throw UsageError("format must be csv or jsonl");
        const auto path = cfg.get<std::string>("out", "");

        Report rep(sub, json::object(), common.ctx.seed);
        if (sub == "simulate")
            cmd_simulate(cfg, common, rep);
        else if (sub == "spine")
            cmd_spine(cfg, common, rep);
        else if (sub == "verify-m2f")
            cmd_verify_m2f(cfg, common, rep);
        else if (sub == "cpp-poly")
            cmd_cpp_poly(cfg, common, rep);
        else if (sub == "entrance")
            cmd_entrance(cfg, common, rep);
        else if (sub == "yaglom")
            cmd_yaglom(cfg, common, rep);
        else if (sub == "distance-agree")
            cmd_distance(cfg, common, rep);
        else
            cmd_selftest(cfg, common, rep, err);

        // Defaults filled in by the subcommand are part of the recorded config.
        Report final_rep(sub, cfg.recorded(), common.ctx.seed);
        for (auto const& r : rep.rows())
            final_rep.add(r.point, r.statistic, r.estimate, r.se, r.count, r.reference);
        for (auto const& ch : rep.checks())
            final_rep.check(ch.name, ch.pass, ch.detail);

        std::ostringstream body;
        if (fmt_name == "csv")
            final_rep.write_csv(body);
        else
            final_rep.write_jsonl(body);
        if (path.empty())
            out << body.str();
        else
        {
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f || !(f << body.str()))
                throw UsageError("cannot write '" + path + "'");
        }
        if (!final_rep.all_pass())
        {
            for (auto const& ch : final_rep.checks())
                if (!ch.pass)
                    err << "assertion failed: " << ch.name << " (" << ch.detail << ")\n";
            return assertion_failure;
        }
        return ok;
    }
    catch (UsageError const& e)
    {
        err << "spinesim " << sub << ": " << e.what() << "\n";
        return usage_error;
    }
    catch (std::invalid_argument const& e)
    {
        err << "spinesim " << sub << ": " << e.what() << "\n";
        return usage_error;
    }
    catch (std::exception const& e)
    {
        err << "spinesim " << sub << ": error: " << e.what() << "\n";
        return usage_error;
    }
}

int run(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace spinesim::cli
