#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "accumulator.hpp"
#include "core.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace spinesim {

/*!
 * Parameters of the branching process with recombination.
 *
 * The root carries (0, R); N is the time scale, so offspring means are
 * 1 + |I|/N. R > N is accepted but flagged by `r_exceeds_n`.
 */
struct ModelParams
{
    double R = 0;
    std::uint32_t N = 1;
    std::size_t node_cap = 10'000'000;

    void validate() const;
    [[nodiscard]] bool r_exceeds_n() const noexcept { return R > N; }
    [[nodiscard]] Interval root() const noexcept { return {0.0, R}; }
    //! floor(t N), the generation reached at rescaled time t.
    [[nodiscard]] std::uint32_t horizon(double t) const;
};

[[nodiscard]] double offspring_mean(Interval const& I, ModelParams const& params) noexcept;

//! r_N(I) = (2|I|/N) / (1 + |I|/N).
[[nodiscard]] double recombination_probability(Interval const& I, ModelParams const& params) noexcept;

std::uint32_t offspring_count(Interval const& I, ModelParams const& params, Rng& rng);

//! Mark of one child: I itself, or the left/right piece at a uniform crossover point.
Interval child_interval(Interval const& I, ModelParams const& params, Rng& rng);

struct Extinct
{
    std::uint32_t generation = 0;  // first empty generation
};

struct Survived
{
    MarkedTree tree;
};

struct CapExceeded
{
    std::uint32_t generation = 0;
    std::size_t live = 0;
};

using SimOutcome = std::variant<Extinct, Survived, CapExceeded>;

/*!
 * Breadth-first forward simulation from the root mark (0, R) up to
 * `horizon` generations (default N). CapExceeded is returned as soon as one
 * generation holds more than node_cap individuals.
 */
SimOutcome simulate_forward(ModelParams const& params, Rng& rng);
SimOutcome simulate_forward(ModelParams const& params, std::uint32_t horizon, Rng& rng);

/*!
 * Same process and the same random stream consumption as simulate_forward,
 * but only the live generation is kept (double-buffered). Optionally records
 * the total mark length of every generation.
 */
struct Census
{
    enum class Status
    {
        extinct,
        survived,
        cap_exceeded
    };
    Status status = Status::extinct;
    std::uint32_t generation = 0;
    std::vector<Interval> last_generation;
    std::vector<double> mass;  // mass[n] = sum of |I_u| over generation n, if recorded
};

Census simulate_census(ModelParams const& params, std::uint32_t horizon, Rng& rng,
                       bool record_mass = false);

struct SurvivalEstimate
{
    Accumulator indicator;  // 1{Z_horizon > 0} per counted replicate
    std::uint64_t cap_exceeded = 0;
    std::uint32_t horizon = 0;
};

struct SurvivalOptions
{
    //! Capped runs count as survivors unless excluded.
    bool exclude_capped = false;
};

//! Monte Carlo estimate of P_R(Z_{floor(tN)} > 0).
SurvivalEstimate survival_probability(ModelParams const& params, double t, std::size_t replicates,
                                      RunContext const& ctx, SurvivalOptions options = {});

//! Per-generation mean of the total mark length sum_{u in T_n} |I_u|, n = 0..horizon.
std::vector<Accumulator> harmonic_mass(ModelParams const& params, std::uint32_t horizon,
                                       std::size_t replicates, RunContext const& ctx);

class ConditioningFailure : public std::runtime_error
{
  public:
    explicit ConditioningFailure(std::uint64_t attempts);
    [[nodiscard]] std::uint64_t attempts() const noexcept { return attempts_; }

  private:
    std::uint64_t attempts_;
};

//! Rejection sampler: a tree that survives to floor(tN).
MarkedTree sample_conditioned(ModelParams const& params, double t, Rng& rng,
                              std::uint64_t max_attempts = 1'000'000);

}  // namespace spinesim
