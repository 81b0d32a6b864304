#include "spinesim/report.hpp"

#include <charconv>
#include <cmath>

namespace spinesim {

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

namespace {

std::string csv_field(std::string const& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
    {
        if (c == '"')
            q += '"';
        q += c;
    }
    return q + "\"";
}

nlohmann::json json_number(double x)
{
    if (std::isfinite(x))
        return x;
    return nullptr;
}

constexpr const char* kColumns = "point,statistic,estimate,se,count,reference";

}  // namespace

Report::Report(std::string subcommand, nlohmann::json config, std::uint64_t seed)
    : subcommand_(std::move(subcommand)), config_(std::move(config)), seed_(seed)
{
}

void Report::add(std::string point, std::string statistic, double estimate, double se,
                 std::uint64_t count, std::optional<double> reference)
{
    rows_.push_back({std::move(point), std::move(statistic), estimate, se, count, reference});
}

void Report::add(std::string point, std::string statistic, Estimate const& e,
                 std::optional<double> reference)
{
    const double se = e.count >= 2 ? e.se : std::numeric_limits<double>::quiet_NaN();
    add(std::move(point), std::move(statistic), e.value, se, e.count, reference);
}

void Report::check(std::string name, bool pass, std::string detail)
{
    checks_.push_back({std::move(name), pass, std::move(detail)});
}

bool Report::all_pass() const noexcept
{
    for (auto const& c : checks_)
        if (!c.pass)
            return false;
    return true;
}

void Report::write_csv(std::ostream& os) const
{
    os << "# spinesim " << kVersion << "\n";
    os << "# schema: " << subcommand_ << "/1 " << kColumns << "\n";
    os << "# seed: " << seed_ << "\n";
    os << "# config: " << config_.dump() << "\n";
    os << kColumns << "\n";
    for (auto const& r : rows_)
    {
        os << csv_field(r.point) << ',' << csv_field(r.statistic) << ',' << format_number(r.estimate)
           << ',' << format_number(r.se) << ',' << r.count << ','
           << (r.reference ? format_number(*r.reference) : std::string()) << "\n";
    }
    for (auto const& c : checks_)
        os << "# check " << c.name << ": " << (c.pass ? "pass" : "fail") << " (" << c.detail << ")\n";
}

void Report::write_jsonl(std::ostream& os) const
{
    nlohmann::json header = {{"record", "header"},   {"version", kVersion},
                             {"subcommand", subcommand_}, {"schema", std::string(subcommand_) + "/1"},
                             {"seed", seed_},        {"config", config_}};
    os << header.dump() << "\n";
    for (auto const& r : rows_)
    {
        nlohmann::json j = {{"record", "row"},
                            {"point", r.point},
                            {"statistic", r.statistic},
                            {"estimate", json_number(r.estimate)},
                            {"se", json_number(r.se)},
                            {"count", r.count},
                            {"reference", r.reference ? json_number(*r.reference) : nullptr}};
        os << j.dump() << "\n";
    }
    for (auto const& c : checks_)
    {
        nlohmann::json j = {{"record", "check"}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}};
        os << j.dump() << "\n";
    }
}

}  // namespace spinesim
