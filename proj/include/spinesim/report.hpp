#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "accumulator.hpp"

namespace spinesim {

inline constexpr const char* kVersion = "1.0.0";

//! One (parameter point, statistic) record.
struct ReportRow
{
    std::string point;
    std::string statistic;
    double estimate = 0;
    double se = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t count = 0;
    std::optional<double> reference;
};

struct ReportCheck
{
    std::string name;
    bool pass = false;
    std::string detail;
};

/*!
 * Rows plus optional pass/fail checks, written as CSV or JSONL behind a
 * header carrying version, subcommand, schema, seed and config. Nothing
 * run-dependent (threads, timings) is written, so identical inputs give
 * identical bytes.
 */
class Report
{
  public:
    Report(std::string subcommand, nlohmann::json config, std::uint64_t seed);

    void add(std::string point, std::string statistic, double estimate, double se,
             std::uint64_t count, std::optional<double> reference = std::nullopt);
    void add(std::string point, std::string statistic, Estimate const& e,
             std::optional<double> reference = std::nullopt);
    void check(std::string name, bool pass, std::string detail);

    [[nodiscard]] std::vector<ReportRow> const& rows() const noexcept { return rows_; }
    [[nodiscard]] std::vector<ReportCheck> const& checks() const noexcept { return checks_; }
    [[nodiscard]] bool all_pass() const noexcept;

    void write_csv(std::ostream& os) const;
    void write_jsonl(std::ostream& os) const;

  private:
    std::string subcommand_;
    nlohmann::json config_;
    std::uint64_t seed_;
    std::vector<ReportRow> rows_;
    std::vector<ReportCheck> checks_;
};

//! Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);

}  // namespace spinesim
