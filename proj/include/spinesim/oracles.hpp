#pragma once

#include <cstdint>
#include <vector>

namespace spinesim::oracle {

// Reference values for the critical Poisson(1) Galton-Watson process (R = 0).

/*!
 * P(Z_N = j), j = 0..max_size, from the power series of the N-fold
 * composition of f(s) = exp(s - 1) truncated at degree max_size.
 */
std::vector<double> critical_generation_pmf(std::uint32_t N, std::uint32_t max_size = 256);

//! E[Z (Z-1) ... (Z-k+1)] of a pmf on {0, 1, ...}.
double factorial_moment(std::vector<double> const& pmf, std::uint32_t k);

//! 1 - q_N with q_0 = 0, q_n = exp(q_{n-1} - 1).
double critical_survival(std::uint32_t N);

//! E[Z_N | Z_N > 0] = 1 / P(Z_N > 0) since E[Z_N] = 1.
double critical_conditioned_mean(std::uint32_t N);

}  // namespace spinesim::oracle
