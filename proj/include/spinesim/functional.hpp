#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core.hpp"

namespace spinesim {

/*!
 * Test functional phi evaluated on a sampled distance matrix with marks.
 *
 * Named battery (parsed by `parse_functional`):
 *   const                 phi = 1
 *   dist_indicator(a)     phi = 1{d(1,2) <= a}   (1 when k = 1)
 *   mark_power(p, cap)    phi = prod_i min(mark_i, cap)^p, cap may be "inf"
 */
struct TestFunctional
{
    std::string name;
    std::function<double(UltrametricMatrix const&)> eval;

    double operator()(UltrametricMatrix const& m) const { return eval(m); }
};

TestFunctional const_functional();
TestFunctional dist_indicator(double a);
TestFunctional mark_power(double p, double cap);

//! Throws std::invalid_argument naming the offending text.
TestFunctional parse_functional(std::string const& spec);

//! Fixed battery used by the many-to-few property checks.
std::vector<TestFunctional> default_battery(std::uint32_t N);

}  // namespace spinesim
