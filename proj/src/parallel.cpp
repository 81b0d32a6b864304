#include "spinesim/parallel.hpp"

#include <thread>

namespace spinesim {

int available_threads() noexcept
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    const unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? static_cast<int>(n) : 1;
#endif
}

}  // namespace spinesim
