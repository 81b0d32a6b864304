#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#    include <omp.h>
#endif

#include "accumulator.hpp"
#include "rng.hpp"

namespace spinesim {

//! Where replicate streams come from and how many workers to use.
struct RunContext
{
    std::uint64_t seed = 0;
    int threads = 0;  // 0: all available
};

int available_threads() noexcept;

/*!
 * Serial reference: evaluates fn(i, rng_i) for every replicate i in order.
 * rng_i is Rng(seed, stream_id(tag, i)).
 */
template <class T, class Fn>
std::vector<T> map_replicates_serial(std::size_t n, std::uint64_t seed, std::uint64_t tag, Fn&& fn)
{
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        Rng rng(seed, stream_id(tag, i));
        out[i] = fn(i, rng);
    }
    return out;
}

/*!
 * OpenMP version of map_replicates_serial. Outputs are stored by replicate
 * index, so the result is identical to the serial reference for every
 * thread count.
 */
template <class T, class Fn>
std::vector<T> map_replicates(std::size_t n, RunContext const& ctx, std::uint64_t tag, Fn&& fn)
{
#ifdef _OPENMP
    const int threads = ctx.threads > 0 ? ctx.threads : available_threads();
    if (threads > 1 && n > 1)
    {
        std::vector<T> out(n);
        const auto count = static_cast<std::int64_t>(n);
#    pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
        for (std::int64_t i = 0; i < count; ++i)
        {
            Rng rng(ctx.seed, stream_id(tag, static_cast<std::uint64_t>(i)));
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i), rng);
        }
        return out;
    }
#endif
    return map_replicates_serial<T>(n, ctx.seed, tag, std::forward<Fn>(fn));
}

//! Accumulates a per-replicate scalar.
template <class Fn>
Accumulator accumulate_replicates(std::size_t n, RunContext const& ctx, std::uint64_t tag, Fn&& fn)
{
    auto values = map_replicates<double>(n, ctx, tag, std::forward<Fn>(fn));
    Accumulator acc;
    for (double v : values)
        acc.add(v);
    return acc;
}

}  // namespace spinesim
