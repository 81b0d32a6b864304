#pragma once

#include <cstdint>
#include <vector>

#include "accumulator.hpp"
#include "branching.hpp"
#include "core.hpp"
#include "functional.hpp"
#include "parallel.hpp"
#include "rescale.hpp"
#include "rng.hpp"
#include "spine.hpp"

namespace spinesim {

//! k individuals of generation `gen`, uniformly with replacement. Throws if the generation is empty.
std::vector<NodeId> sample_individuals(MarkedTree const& tree, std::uint32_t gen, std::uint32_t k,
                                       Rng& rng);

/*!
 * d-bar(u, v) = 1 - F_R(1 - depth(u, v) / n) for the given individuals of
 * generation n, with their interval lengths as marks.
 */
UltrametricMatrix rescaled_genealogy(MarkedTree const& tree, std::span<NodeId const> individuals,
                                     double R);

//! Samples k individuals of the last generation and rescales their genealogy.
UltrametricMatrix rescaled_genealogy(MarkedTree const& tree, double R, std::uint32_t k, Rng& rng);

/*!
 * D-bar(u, v) = log(max(|M_u - M_v|, 2)) / log R with one reference point M_u
 * uniform on I_u per distinct individual (repeated individuals share it).
 */
SquareMatrix chromosomic_matrix(MarkedTree const& tree, std::span<NodeId const> individuals,
                                double R, Rng& rng);

struct DistanceAgreement
{
    double R = 0;
    std::vector<double> ratios;  // log D / (d log R), one per pair and replicate
    double median = 0;
    double q05 = 0;
    double q25 = 0;
    double q75 = 0;
    double q95 = 0;
    Accumulator mean;

    [[nodiscard]] double iqr() const noexcept { return q75 - q25; }
    [[nodiscard]] double width90() const noexcept { return q95 - q05; }
};

/*!
 * Continuous k-spine from [0, R] over [0, 1]; M_i uniform on I_i(1);
 * d(i, j) = 1 - F_R(min(W_i..W_{j-1})), D(i, j) = |M_i - M_j|.
 */
DistanceAgreement distance_agreement_check(std::uint32_t k, double R, std::size_t replicates,
                                           RunContext const& ctx);

struct YaglomPoint
{
    double R = 0;
    std::uint32_t N = 0;
    double t = 1;
    std::uint32_t horizon = 0;
    std::uint64_t replicates = 0;
    std::uint64_t capped = 0;
    Accumulator survival;      // 1{Z_horizon > 0}, capped runs excluded
    Accumulator mass_ratio;    // Z / (t N log R) per surviving run
    Accumulator mark_mean;     // mean interval length within each surviving run
    double mark_ks = 0;        // sup |F_weighted - Exp(t) CDF|
    double chaos_correlation = 0;

    //! N log R P / R, which tends to 1 (see the README on the normalisation).
    [[nodiscard]] Estimate survival_ratio() const;
};

/*!
 * Forward census runs at (R, N), conditioned on survival to floor(tN):
 * total mass, the law of a uniformly chosen individual's length (weighted
 * per run so every surviving run counts once), and the correlation of two
 * distinct individuals' lengths.
 */
YaglomPoint yaglom_point(ModelParams const& params, double t, std::size_t replicates,
                         RunContext const& ctx);

struct YaglomControl
{
    std::uint32_t N = 0;
    Accumulator survival;
    Accumulator scaled_size;  // Z_N / N given survival
    double ks_exp = 0;        // against Exp with mean 1/2
};

//! Critical Poisson(1) Galton-Watson (R = 0): Z_N / N given survival.
YaglomControl yaglom_critical_control(std::uint32_t N, std::size_t replicates,
                                      RunContext const& ctx);

/*!
 * Scaling constants of the polynomial estimator: population size divided by
 * alpha, genealogical distance mapped by gamma, marks left unchanged.
 * `log_rescaled` means alpha = t N log R and gamma(d) = 1 - F_R(1 - d/n).
 */
struct Scaling
{
    enum class Distance
    {
        raw,
        log_rescaled
    };
    Distance distance = Distance::raw;
    double alpha = 1;
    double R = 0;
    std::uint32_t N = 1;
    double t = 1;
    //! P(Z_N > 0) used by the spine mode (an estimate in practice).
    double survival = 1;

    static Scaling identity(std::uint32_t N);
    static Scaling recombination(double R, std::uint32_t N, double t, double survival);

    //! Throws std::invalid_argument("mismatched scaling constants ...") when inconsistent.
    void validate() const;
};

enum class PolynomialMode
{
    forward,
    spine
};

struct PolynomialOptions
{
    bool distinct = false;  // forward mode: distinct tuples instead of mu^{k}
    std::uint64_t tuple_budget = 1'000'000;
    std::uint64_t subsample = 100'000;
};

struct PolynomialEstimate
{
    Accumulator raw;     // per replicate (forward: every run, extinct ones give 0)
    double scale = 1;    // 1 / P(Z > 0): empirical (forward) or Scaling::survival (spine)
    std::uint64_t survivors = 0;
    std::uint64_t capped = 0;

    [[nodiscard]] Estimate estimate() const { return Estimate::from(raw, scale); }
};

/*!
 * forward: alpha^-k E[sum over k-tuples of generation floor(tN) of phi] / P(Z > 0).
 * spine:   h(x) k! N^{k-1} / (alpha^k P(Z_N > 0)) Q[Delta_k phi], the
 *          many-to-few right-hand side with rescaled inputs (t = 1 only).
 */
PolynomialEstimate polynomial_estimator(PolynomialMode mode, ModelParams const& params,
                                        std::uint32_t k, TestFunctional const& phi,
                                        Scaling const& scaling, std::size_t replicates,
                                        RunContext const& ctx, PolynomialOptions const& options = {});

}  // namespace spinesim
