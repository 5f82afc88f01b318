#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <vector>

namespace delaystab {

/// Worker count for batch evaluation. 0 selects DELAYSTAB_THREADS when set,
/// otherwise the hardware concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs fn(i) for i in [0, count) on the worker pool. Work is split into
/// contiguous index blocks; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Results are stored by index, so the output is independent of scheduling.
template <typename Fn>
auto parallel_map(std::size_t count, Fn&& fn) {
    using T = decltype(fn(std::size_t{}));
    std::vector<std::optional<T>> out(count);
    parallel_for(count, [&](std::size_t i) { out[i].emplace(fn(i)); });
    return out;
}

}  // namespace delaystab
