#include "cmf/parallel.hpp"

#include <thread>

namespace cmf {

namespace detail {
std::atomic<int>& compute_threads_slot() {
    static std::atomic<int> slot{0};
    return slot;
}
}  // namespace detail

int compute_threads() {
    const int n = detail::compute_threads_slot().load(std::memory_order_relaxed);
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

void set_compute_threads(int n) {
    detail::compute_threads_slot().store(n, std::memory_order_relaxed);
}

}  // namespace cmf
