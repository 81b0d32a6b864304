#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "accumulator.hpp"
#include "branching.hpp"
#include "core.hpp"
#include "functional.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace spinesim {

/*!
 * Harmonic function used for the h-transform. `interval_length` (h = |I|) is
 * the recombination model; `unit` (h = 1) is only harmonic for the critical
 * typeless model, i.e. when every mark has length 0 (R = 0).
 */
enum class Harmonic
{
    interval_length,
    unit
};

double harmonic_value(Harmonic h, Interval const& I) noexcept;

//! Distribution nu of the discrete branch times on {0, ..., N-1}; every weight > 0.
class NuDistribution
{
  public:
    explicit NuDistribution(std::vector<double> weights);

    static NuDistribution uniform(std::uint32_t N);
    //! nu_n = F_R((n+1)/N) - F_R(n/N), i.e. floor(W N) with P(W <= u) = F_R(u).
    static NuDistribution branch_times(std::uint32_t N, double R);

    [[nodiscard]] std::uint32_t N() const noexcept { return static_cast<std::uint32_t>(weights_.size()); }
    [[nodiscard]] double weight(std::uint32_t n) const { return weights_.at(n); }
    [[nodiscard]] std::uint32_t sample(Rng& rng) const;

  private:
    std::vector<double> weights_;
    std::vector<double> cdf_;
};

//! branch_times(N, R) when R > 1, otherwise uniform(N).
NuDistribution default_nu(std::uint32_t N, double R);

//! Piecewise-constant interval-valued path: state changes at strictly increasing times.
template <class Time>
struct Path
{
    std::vector<Time> times;
    std::vector<Interval> states;

    Path() = default;
    explicit Path(Interval start, Time t0 = Time{}) : times{t0}, states{start} {}

    //! State at time t (the last change at or before t).
    [[nodiscard]] Interval at(Time t) const;
    [[nodiscard]] Interval const& back() const { return states.back(); }
    [[nodiscard]] std::size_t jumps() const noexcept { return states.size() - 1; }
    void push(Time t, Interval s)
    {
        times.push_back(t);
        states.push_back(s);
    }
    //! Keeps the changes at times <= t.
    [[nodiscard]] Path prefix(Time t) const;
};

using DiscretePath = Path<std::uint32_t>;
using ContinuousPath = Path<double>;

/*!
 * k-spine: branch times W_1..W_{k-1} and k mark paths with
 * X_{i+1}(s) = X_i(s) for s <= W_i. The discrete flavour lives on generations
 * {0..N}; the continuous one on real time [0, horizon].
 */
template <class Time>
struct KSpine
{
    std::uint32_t k = 1;
    Time horizon{};
    std::vector<Time> branch_times;
    std::vector<Path<Time>> paths;

    [[nodiscard]] Interval leaf(std::size_t i) const { return paths.at(i).at(horizon); }
};

using DiscreteKSpine = KSpine<std::uint32_t>;
using ContinuousKSpine = KSpine<double>;

//! Density 2u/L^2 on (0, L], drawn as L sqrt(U).
double size_biased_uniform(double L, Rng& rng);

//! Fragment of the spine jump: [a, a+U*] or [b-U*, b] with probability 1/2 each.
Interval spine_fragment(Interval const& I, Rng& rng);

//! One step of the discrete h-transformed chain: stay w.p. 1 - |I|/N, else fragment.
Interval spine_step_discrete(Interval const& I, ModelParams const& params, Rng& rng);

/*!
 * Discrete chain from `start` at generation t0 up to generation `end`,
 * simulated by geometric holding times (same law as repeated single steps).
 */
DiscretePath spine_path_discrete(Interval start, std::uint32_t t0, std::uint32_t end,
                                 ModelParams const& params, Rng& rng);

/*!
 * Continuous-time spine: holding time Exp(|I|), then a fragment. Paths start
 * at time t0 and run to t_max; a zero-length interval is absorbing.
 */
ContinuousPath spine_path_continuous(Interval start, double t_max, Rng& rng, double t0 = 0.0);

struct SpineConvergence
{
    Accumulator discrete;    // |I^N(t)| = |I(floor(Nt))| under the discrete chain
    Accumulator continuous;  // |I(t)| under the continuous chain
    std::vector<double> discrete_sample;
    std::vector<double> continuous_sample;
    double ks_statistic = 0;
    double ks_p_value = 1;
};

SpineConvergence spine_discrete_converges_check(Interval I0, std::uint32_t N, double t,
                                                std::size_t replicates, RunContext const& ctx);

DiscreteKSpine sample_kspine_discrete(std::uint32_t k, NuDistribution const& nu, Interval I0,
                                      Rng& rng);

//! Branch times i.i.d. with CDF F_R on [0,1]; paths from [0, R] over [0, 1].
ContinuousKSpine sample_kspine_continuous(std::uint32_t k, double R, Rng& rng);

enum class FactorialMomentForm
{
    poisson_shortcut,  // m_d / (d! m^d) = 1/d! for Poisson offspring
    general            // m_d computed from the offspring pmf
};

struct DeltaOptions
{
    Harmonic harmonic = Harmonic::interval_length;
    FactorialMomentForm form = FactorialMomentForm::poisson_shortcut;
    //! Mutation-test hook: omits the 1/d_u! factor (must make verify-m2f fail).
    bool drop_degree_factorial = false;
};

/*!
 * Bias of the k-spine:
 *   prod_{branch points u} (h(Y_u) / (N nu_|u|))^{d_u - 1} m_{d_u}/(d_u! m^{d_u})
 *   * prod_i 1 / h(X_i(N)).
 */
double delta_k(DiscreteKSpine const& spine, NuDistribution const& nu, ModelParams const& params,
               DeltaOptions const& options = {});

//! Ratio m_d(x) / (d! m(x)^d) for Poisson offspring with the given mean, from the pmf.
double factorial_moment_ratio(double mean, std::uint32_t d);

//! Depth matrix d_T(i,j) = N - min(W_i..W_{j-1}) with leaf marks |X_i(N)|.
UltrametricMatrix spine_sample_matrix(DiscreteKSpine const& spine);

struct ManyToFewSetup
{
    std::uint32_t k = 2;
    ModelParams params;  // I0 = (0, R), horizon N
    Harmonic harmonic = Harmonic::interval_length;
};

//! Harmonic implied by R: unit for the typeless critical model (R = 0), length otherwise.
Harmonic default_harmonic(double R) noexcept;

/*!
 * h(I0) N^{k-1} k! E[Delta_k phi(d_T(sigma_i, sigma_j), X_{sigma_i}(N))], one
 * accumulated value per replicate.
 */
Accumulator many_to_few_rhs(ManyToFewSetup const& setup, NuDistribution const& nu,
                            TestFunctional const& phi, std::size_t replicates,
                            RunContext const& ctx, DeltaOptions options = {});

struct ManyToFewLhs
{
    Accumulator sums;
    std::uint64_t subsampled = 0;   // replicates where tuples were subsampled
    std::uint64_t cap_exceeded = 0; // replicates dropped by node_cap
};

/*!
 * E[sum over ordered distinct k-tuples of generation N of phi(depths, marks)]
 * by forward simulation; exact sums when Z_N^k <= tuple_budget, otherwise
 * `subsample` distinct tuples with Horvitz-Thompson weighting.
 */
ManyToFewLhs many_to_few_lhs(ManyToFewSetup const& setup, TestFunctional const& phi,
                             std::size_t replicates, RunContext const& ctx,
                             std::uint64_t tuple_budget = 1'000'000,
                             std::uint64_t subsample = 100'000);

//! Sum of phi over ordered distinct k-tuples of generation-`gen` nodes of one tree.
struct TupleSum
{
    double value = 0;
    bool subsampled = false;
};
TupleSum tuple_sum(MarkedTree const& tree, std::uint32_t gen, std::uint32_t k,
                   TestFunctional const& phi, Rng& rng, std::uint64_t tuple_budget,
                   std::uint64_t subsample);

struct GraftedTree
{
    MarkedTree tree;
    std::vector<NodeId> spine_leaves;  // images of the k spine leaves, planar order
    std::vector<bool> on_spine;        // per node: ancestor of some spine leaf
};

/*!
 * Grafts independent forward subtrees on a discrete k-spine: every spine
 * vertex u gets K_u = d_u + Poisson(m(Y_u)) children (the d_u-th factorial
 * size bias of Poisson offspring), the d_u spine children at uniformly chosen
 * ranks, the others with marks from the offspring kernel and P-subtrees.
 */
GraftedTree graft_tree(DiscreteKSpine const& spine, ModelParams const& params, Rng& rng);

}  // namespace spinesim
