#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace spinesim {

struct CriterionResult
{
    int id = 0;
    std::string title;
    bool pass = false;
    std::vector<std::string> lines;  // measured values and thresholds
    double seconds = 0;
    double budget_seconds = 0;
    bool over_budget = false;
};

/*!
 * `scale` multiplies every replicate count (1 is the full battery).
 * Thresholds that are fixed absolute tolerances on Monte Carlo averages or
 * KS distances are widened by 1/sqrt(scale) so the reduced battery tests
 * the same number of standard errors. Runtime budgets are enforced only
 * when `enforce_budgets` is set.
 */
struct AcceptanceOptions
{
    double scale = 1.0;
    std::uint64_t seed = 20241016;
    int threads = 0;
    std::vector<int> only;  // empty: all criteria
    bool enforce_budgets = false;
    std::ostream* progress = nullptr;
};

inline constexpr int kCriterionCount = 12;

std::vector<CriterionResult> run_acceptance(AcceptanceOptions const& options);

}  // namespace spinesim
