#ifndef COVERID_PARALLEL_HPP
#define COVERID_PARALLEL_HPP

#include <algorithm>
#include <thread>
#include <vector>

namespace coverid {

// Runs fn(begin, end) over a partition of [0, n). Each range is disjoint, so
// results are independent of the schedule as long as fn writes only to its
// own rows. threads <= 1 runs inline.
template <class Fn>
void parallel_for(long n, int threads, Fn&& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        fn(0L, n);
        return;
    }
    const long workers = std::min<long>(threads, n);
    const long chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (long w = 0; w < workers; ++w) {
        const long begin = w * chunk;
        const long end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

} // namespace coverid

#endif
