#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "accumulator.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spine.hpp"

namespace spinesim {

//! [-E1, E2] with E1, E2 independent Exp(t); the length is Gamma(2, t).
Interval entrance_interval(double t, Rng& rng);

//! CDF of Gamma(2, t): 1 - e^{-tx}(1 + tx).
double gamma2_cdf(double x, double t) noexcept;

//! Lengths of n independent entrance-law intervals at time t.
std::vector<double> entrance_lengths(double t, std::size_t n, RunContext const& ctx);

/*!
 * Rate-1 Poisson point process on [0, t_max] x R, stored through what the
 * interval covering 0 can see: on each side, the "records" (atoms closer to
 * 0 than every earlier-in-time atom on that side). Ordered by distance from
 * 0, record j sits at x_{j+1} = x_j + Exp(tau_j) with time tau_{j+1} =
 * tau_j U, tau_0 = t_max. Records are generated lazily, each side from its
 * own stream, so every query on one realization is consistent.
 */
class PlanarPoisson
{
  public:
    struct Record
    {
        double time = 0;
        double position = 0;  // distance from 0, increasing along the list
    };
    enum Side
    {
        left = 0,
        right = 1
    };

    PlanarPoisson(double t_max, Rng& rng);

    [[nodiscard]] double t_max() const noexcept { return t_max_; }

    //! Distance from 0 to the nearest atom on `side` with time <= s, capped at `bound`.
    double endpoint(Side side, double s, double bound);

    //! Records with position < bound (generating them as needed).
    std::vector<Record> const& records_within(Side side, double bound);

  private:
    void grow(Side side);

    double t_max_;
    std::array<Rng, 2> rng_;
    std::array<std::vector<Record>, 2> records_;
};

struct CoupledPath
{
    double M = 0;  // reference point is M R
    ContinuousPath path;
};

/*!
 * I_R(t) = MR + (I_P(t) intersected with [-MR, (1-M)R]) for t in [0, t_max],
 * with M uniform on (0,1). Starts exactly at [0, R].
 */
CoupledPath poisson_coupled_path(double R, double t_max, Rng& rng);

//! Same, on a given realization and reference fraction M.
ContinuousPath coupled_path(PlanarPoisson& P, double M, double R);

struct CouplingRow
{
    double R = 0;
    Accumulator coincide;  // 1{clipped length == unclipped length at t}
    double oracle = 0;     // 1 - 2(1 - e^{-a})/a + e^{-a}, a = tR
};

/*!
 * Frequency with which clipping to [-MR, (1-M)R] leaves the interval at
 * time t unchanged. One Poisson realization and one M per replicate are
 * shared across the whole R grid.
 */
std::vector<CouplingRow> entrance_coupling_check(std::vector<double> const& R_grid, double t,
                                                 std::size_t replicates, RunContext const& ctx);

double coupling_oracle(double R, double t) noexcept;

struct TwoSampleReport
{
    std::vector<double> a;
    std::vector<double> b;
    Accumulator mean_a;
    Accumulator mean_b;
    double ks_statistic = 0;
    double ks_p_value = 1;
};

//! c |I(ct)| under Q^1_R versus |I(t)| under Q^1_{cR}.
TwoSampleReport self_similarity_check(double R, double c, double t, std::size_t replicates,
                                      RunContext const& ctx);

//! |I(t)| from poisson_coupled_path versus spine_path_continuous, both from [0, R].
TwoSampleReport poisson_vs_spine_check(double R, double t, std::size_t replicates,
                                       RunContext const& ctx);

struct SpineLimitReport
{
    std::vector<double> u;
    std::vector<Accumulator> coordinate;  // F^{-1}(u_i) X(F^{-1}(u_i))
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<std::vector<double>> correlation;
};

SpineLimitReport rescaled_spine_limit_check(double R, std::vector<double> const& u,
                                            std::size_t replicates, RunContext const& ctx);

}  // namespace spinesim
