#include "spinesim/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace spinesim::oracle {

std::vector<double> critical_generation_pmf(std::uint32_t N, std::uint32_t max_size)
{
    const std::size_t D = std::size_t(max_size) + 1;
    // f_0(s) = s; f_n = exp(f_{n-1} - 1), expanded with n e_n = sum_k k a_k e_{n-k}.
    std::vector<double> a(D, 0.0);
    if (D > 1)
        a[1] = 1.0;
    for (std::uint32_t n = 0; n < N; ++n)
    {
        std::vector<double> e(D, 0.0);
        e[0] = std::exp(a[0] - 1.0);
        for (std::size_t m = 1; m < D; ++m)
        {
            double s = 0;
            for (std::size_t j = 1; j <= m; ++j)
                s += double(j) * a[j] * e[m - j];
            e[m] = s / double(m);
        }
        a = std::move(e);
    }
    return a;
}

double factorial_moment(std::vector<double> const& pmf, std::uint32_t k)
{
    double m = 0;
    for (std::size_t j = k; j < pmf.size(); ++j)
    {
        double falling = 1;
        for (std::uint32_t r = 0; r < k; ++r)
            falling *= double(j - r);
        m += falling * pmf[j];
    }
    return m;
}

double critical_survival(std::uint32_t N)
{
    double q = 0;
    for (std::uint32_t n = 0; n < N; ++n)
        q = std::exp(q - 1.0);
    return 1.0 - q;
}

double critical_conditioned_mean(std::uint32_t N)
{
    return 1.0 / critical_survival(N);
}

}  // namespace spinesim::oracle
