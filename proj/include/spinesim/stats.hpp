#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spinesim::stats {

// Goodness-of-fit helpers used by the diagnostics and the test suites.

//! One-sample KS statistic sup|F_n - F|; `sample` is copied and sorted.
double ks_statistic(std::span<double const> sample, std::function<double(double)> const& cdf);

//! KS statistic of a weighted empirical CDF (weights need not be normalized).
double ks_statistic_weighted(std::span<double const> values,
                             std::span<double const> weights,
                             std::function<double(double)> const& cdf);

struct TwoSampleKs
{
    double statistic = 0;
    double p_value = 1;
};

TwoSampleKs ks_two_sample(std::span<double const> a, std::span<double const> b);

//! Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

//! P-value of a one-sample KS statistic with Stephens' small-sample correction.
double ks_p_value(double statistic, double n);

//! Pearson chi-square test; returns the p-value. Cells with zero expectation must be empty.
double chi_square_p_value(std::span<double const> observed, std::span<double const> expected,
                          int dof_reduction = 1);

//! Linear-interpolated empirical quantile (type 7); `sample` copied.
double quantile(std::span<double const> sample, double q);

/*!
 * Standard error of a sample quantile from the spread of the order
 * statistics at ranks nq -/+ sqrt(n q (1-q)), halved.
 */
double quantile_se(std::span<double const> sample, double q);

double mean(std::span<double const> x);
double variance(std::span<double const> x);
double correlation(std::span<double const> x, std::span<double const> y);

}  // namespace spinesim::stats
