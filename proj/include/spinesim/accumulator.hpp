#pragma once

#include <array>
#include <cstdint>

namespace spinesim {

/*!
 * Exact (fixed-point, full double range) sum of doubles.
 *
 * Every finite double is an integer multiple of 2^-1074, so the running sum
 * is kept as a two's-complement big integer in units of 2^-1074. Addition
 * and merging are therefore exactly associative and commutative: any
 * grouping of the same values produces the same bits.
 */
class ExactSum
{
  public:
    void add(double x);
    void merge(ExactSum const& other) noexcept;
    [[nodiscard]] double value() const noexcept;
    [[nodiscard]] long double value_ld() const noexcept;

    friend bool operator==(ExactSum const&, ExactSum const&) = default;

  private:
    static constexpr int kLimbs = 35;
    std::array<std::uint64_t, kLimbs> limbs_{};
};

/*!
 * Mergeable Monte Carlo accumulator: count, sum, sum of squares.
 */
class Accumulator
{
  public:
    void add(double x)
    {
        ++count_;
        sum_.add(x);
        sum_sq_.add(x * x);
    }

    void merge(Accumulator const& other) noexcept
    {
        count_ += other.count_;
        sum_.merge(other.sum_);
        sum_sq_.merge(other.sum_sq_);
    }

    [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
    [[nodiscard]] double sum() const noexcept { return sum_.value(); }
    [[nodiscard]] double sum_sq() const noexcept { return sum_sq_.value(); }

    //! Requires count >= 1.
    [[nodiscard]] double mean() const;
    //! Unbiased sample variance; requires count >= 2.
    [[nodiscard]] double variance() const;
    //! Standard error of the mean; requires count >= 2.
    [[nodiscard]] double se() const;

    friend bool operator==(Accumulator const&, Accumulator const&) = default;

  private:
    std::uint64_t count_ = 0;
    ExactSum sum_;
    ExactSum sum_sq_;
};

//! Estimate with its standard error, the unit of every numeric output row.
struct Estimate
{
    double value = 0;
    double se = 0;
    std::uint64_t count = 0;

    static Estimate from(Accumulator const& acc, double scale = 1.0);
};

}  // namespace spinesim
