#pragma once

#include <atomic>

namespace cmf {

/// Worker count for data-parallel loops. Results are bit-identical for any
/// setting: loops only parallelize over disjoint outputs and every output
/// element is accumulated by a single worker in a fixed order.
int compute_threads();
void set_compute_threads(int n);

namespace detail {
std::atomic<int>& compute_threads_slot();
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    const int threads = compute_threads();
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace cmf
