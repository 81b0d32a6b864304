#include "spinesim/accumulator.hpp"

#include <cmath>
#include <stdexcept>

namespace spinesim {

namespace {

constexpr int kBias = 1074;

}  // namespace

void ExactSum::add(double x)
{
    if (!std::isfinite(x))
        throw std::domain_error("non-finite value added to accumulator");
    if (x == 0)
        return;

    const bool negative = x < 0;
    int exp2 = 0;
    const double frac = std::frexp(std::fabs(x), &exp2);
    auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    int pos = exp2 - 53 + kBias;
    if (pos < 0)
    {
        mant >>= -pos;
        pos = 0;
    }
    const int limb = pos / 64;
    const int off = pos % 64;
    const std::uint64_t lo = mant << off;
    const std::uint64_t hi = off ? (mant >> (64 - off)) : 0;

    if (!negative)
    {
        std::uint64_t s0 = limbs_[limb] + lo;
        std::uint64_t carry = s0 < lo;
        limbs_[limb] = s0;
        if (limb + 1 < kLimbs)
        {
            const std::uint64_t a = limbs_[limb + 1];
            const std::uint64_t s1 = a + hi;
            const std::uint64_t s2 = s1 + carry;
            carry = (s1 < a) | (s2 < s1);
            limbs_[limb + 1] = s2;
        }
        for (int i = limb + 2; carry && i < kLimbs; ++i)
            carry = (++limbs_[i] == 0);
    }
    else
    {
        const std::uint64_t a0 = limbs_[limb];
        const std::uint64_t d0 = a0 - lo;
        std::uint64_t borrow = d0 > a0;
        limbs_[limb] = d0;
        if (limb + 1 < kLimbs)
        {
            const std::uint64_t a = limbs_[limb + 1];
            const std::uint64_t d1 = a - hi;
            const std::uint64_t d2 = d1 - borrow;
            borrow = (d1 > a) | (d2 > d1);
            limbs_[limb + 1] = d2;
        }
        for (int i = limb + 2; borrow && i < kLimbs; ++i)
            borrow = (limbs_[i]-- == 0);
    }
}

void ExactSum::merge(ExactSum const& other) noexcept
{
    std::uint64_t carry = 0;
    for (int i = 0; i < kLimbs; ++i)
    {
        const std::uint64_t a = limbs_[i];
        const std::uint64_t s = a + other.limbs_[i];
        const std::uint64_t c1 = s < a;
        limbs_[i] = s + carry;
        const std::uint64_t c2 = limbs_[i] < s;
        carry = c1 | c2;
    }
}

long double ExactSum::value_ld() const noexcept
{
    auto mag = limbs_;
    const bool negative = (mag[kLimbs - 1] >> 63) != 0;
    if (negative)
    {
        std::uint64_t carry = 1;
        for (auto& l : mag)
        {
            l = ~l + carry;
            carry = carry && l == 0;
        }
    }
    int top = kLimbs - 1;
    while (top >= 0 && mag[top] == 0)
        --top;
    if (top < 0)
        return 0.0L;
    long double v = 0;
    for (int i = top; i >= 0 && i >= top - 2; --i)
        v += std::ldexp(static_cast<long double>(mag[i]), 64 * i - kBias);
    return negative ? -v : v;
}

double ExactSum::value() const noexcept
{
    return static_cast<double>(value_ld());
}

double Accumulator::mean() const
{
    if (count_ < 1)
        throw std::logic_error("mean requires at least one sample");
    return static_cast<double>(sum_.value_ld() / count_);
}

double Accumulator::variance() const
{
    if (count_ < 2)
        throw std::logic_error("variance requires at least two samples");
    const long double n = count_;
    const long double s = sum_.value_ld();
    const long double q = sum_sq_.value_ld();
    long double var = (q - s * s / n) / (n - 1);
    if (var < 0)
        var = 0;
    return static_cast<double>(var);
}

double Accumulator::se() const
{
    return std::sqrt(variance() / static_cast<double>(count_));
}

Estimate Estimate::from(Accumulator const& acc, double scale)
{
    Estimate e;
    e.count = acc.count();
    if (e.count >= 1)
        e.value = acc.mean() * scale;
    if (e.count >= 2)
        e.se = acc.se() * std::fabs(scale);
    return e;
}

}  // namespace spinesim
