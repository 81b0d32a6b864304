#pragma once

#include <cmath>
#include <stdexcept>

namespace spinesim {

/*!
 * Logarithmic time change F_R(x) = log((R-1)x + 1) / log R on [0, 1] and its
 * inverse F_R^{-1}(x) = (R^x - 1) / (R - 1). Both fix 0 and 1.
 */
class RescaleR
{
  public:
    explicit RescaleR(double R) : R_(R)
    {
        if (!(R > 1) || !std::isfinite(R))
            throw std::invalid_argument("rescaling requires R > 1");
        log_R_ = std::log(R);
    }

    [[nodiscard]] double R() const noexcept { return R_; }
    [[nodiscard]] double log_R() const noexcept { return log_R_; }

    [[nodiscard]] double forward(double x) const noexcept
    {
        const double arg = (R_ - 1) * x;
        return (arg < 0.5 ? std::log1p(arg) : std::log(arg + 1)) / log_R_;
    }

    [[nodiscard]] double inverse(double y) const noexcept
    {
        const double e = y * log_R_;
        return (e < 0.5 ? std::expm1(e) : std::pow(R_, y) - 1) / (R_ - 1);
    }

    //! N (F_R(x + 1/N) - F_R(x)), the discrete branch-time weight scaled by N.
    [[nodiscard]] double delta_N(double x, unsigned N) const noexcept
    {
        return N * (forward(x + 1.0 / N) - forward(x));
    }

  private:
    double R_;
    double log_R_;
};

inline double f_R(double x, double R)
{
    return RescaleR(R).forward(x);
}

inline double f_R_inv(double x, double R)
{
    return RescaleR(R).inverse(x);
}

}  // namespace spinesim
