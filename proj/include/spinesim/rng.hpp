#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace spinesim {

// SplitMix64 finalizer. Used both to expand seeds and to derive streams.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    return splitmix64(x);
}

/*!
 * xoshiro256** engine with deterministic stream splitting.
 *
 * A stream is identified by (master seed, stream id). The four state words
 * are the first four SplitMix64 outputs started from
 *   mix64(seed) ^ mix64(stream_id ^ 0xD1B54A32D192ED03).
 * Replicate i of a Monte Carlo run always uses stream id i (plus a tag in the
 * high bits, see `stream_id`), so results never depend on thread scheduling.
 */
class Rng
{
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept : Rng(seed, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    {
        std::uint64_t sm = mix64(seed) ^ mix64(stream ^ 0xD1B54A32D192ED03ULL);
        for (auto& w : s_)
            w = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    //! Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return double((*this)() >> 11) * 0x1.0p-53; }

    //! Uniform on (0, 1].
    double uniform_pos() noexcept { return double(((*this)() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    bool coin() noexcept { return ((*this)() >> 63) != 0; }

    //! Exponential with the given rate (rate > 0).
    double exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }

    //! Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept
    {
        // Lemire's multiply-shift with rejection.
        unsigned __int128 m = (unsigned __int128)(*this)() * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n)
        {
            const std::uint64_t threshold = -n % n;
            while (low < threshold)
            {
                m = (unsigned __int128)(*this)() * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /*!
     * Poisson sample by sequential inversion. Intended for the small means
     * of this model (at most 2 when |I| <= N); valid while exp(-mean) does
     * not underflow.
     */
    std::uint32_t poisson(double mean) noexcept
    {
        double p = std::exp(-mean);
        double cdf = p;
        const double u = uniform();
        std::uint32_t k = 0;
        while (u >= cdf && p > 0)
        {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    //! Geometric number of failures before the first success, success prob p in (0,1].
    std::uint64_t geometric_failures(double p) noexcept
    {
        if (p >= 1)
            return 0;
        const double g = std::floor(std::log(uniform_pos()) / std::log1p(-p));
        if (!(g < 0x1.0p62))
            return std::uint64_t(1) << 62;
        return static_cast<std::uint64_t>(g);
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

/*!
 * Build a stream id from a small tag (which experiment / which side of a
 * two-sample comparison) and a replicate index.
 */
constexpr std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index) noexcept
{
    return (tag << 44) ^ index;
}

}  // namespace spinesim
