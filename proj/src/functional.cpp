#include "spinesim/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

namespace spinesim {

TestFunctional const_functional()
{
    return {"const", [](UltrametricMatrix const&) { return 1.0; }};
}

TestFunctional dist_indicator(double a)
{
    std::ostringstream name;
    name << "dist_indicator(" << a << ")";
    return {name.str(), [a](UltrametricMatrix const& m) {
                if (m.k() < 2)
                    return 1.0;
                return m.d(0, 1) <= a ? 1.0 : 0.0;
            }};
}

TestFunctional mark_power(double p, double cap)
{
    std::ostringstream name;
    name << "mark_power(" << p << "," << cap << ")";
    return {name.str(), [p, cap](UltrametricMatrix const& m) {
                double v = 1.0;
                for (double x : m.marks)
                    v *= std::pow(std::min(x, cap), p);
                return v;
            }};
}

namespace {

double parse_number(std::string const& text, std::string const& spec)
{
    if (text == "inf" || text == "Inf" || text == "infinity")
        return std::numeric_limits<double>::infinity();
    try
    {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size())
            throw std::invalid_argument(text);
        return v;
    }
    catch (std::exception const&)
    {
        throw std::invalid_argument("bad number '" + text + "' in functional '" + spec + "'");
    }
}

}  // namespace

TestFunctional parse_functional(std::string const& spec)
{
    static const std::regex call(R"(^\s*([a-z_]+)\s*(?:\(\s*([^,\)]*?)\s*(?:,\s*([^,\)]*?)\s*)?\))?\s*$)");
    std::smatch m;
    if (!std::regex_match(spec, m, call))
        throw std::invalid_argument("unknown functional '" + spec + "'");
    const std::string name = m[1];
    const bool has1 = m[2].matched && !m[2].str().empty();
    const bool has2 = m[3].matched && !m[3].str().empty();
    if (name == "const" && !has1)
        return const_functional();
    if (name == "dist_indicator" && has1 && !has2)
        return dist_indicator(parse_number(m[2], spec));
    if (name == "mark_power" && has1)
        return mark_power(parse_number(m[2], spec),
                          has2 ? parse_number(m[3], spec)
                               : std::numeric_limits<double>::infinity());
    throw std::invalid_argument("unknown functional '" + spec + "'");
}

std::vector<TestFunctional> default_battery(std::uint32_t N)
{
    return {const_functional(), dist_indicator(0.5 * N), dist_indicator(N - 1.0),
            mark_power(1.0, 1.0), mark_power(2.0, 2.0)};
}

}  // namespace spinesim
