#ifndef HESSMC_PARALLEL_HPP
#define HESSMC_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hessmc {

/// Worker count from HESSMC_WORKERS, else the hardware concurrency.
std::size_t default_worker_count();

/**
 * Calls body(i) for every i in [0, count) on up to `workers` threads.
 *
 * Indices are handed out dynamically, so body must only write to slots owned
 * by its index. The first exception thrown by any call is rethrown after all
 * workers have joined.
 */
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace hessmc

#endif
