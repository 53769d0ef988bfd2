#pragma once

// Minimal fork-join helpers. Work is always split into a fixed task
// decomposition that does not depend on the number of workers, so every
// reduction built on top of these is bit-reproducible across thread counts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace polykin {

namespace detail {
inline std::atomic<int>& worker_override() {
    static std::atomic<int> value{-1};
    return value;
}
}  // namespace detail

/// Number of workers used by parallel_for. Reads POLYKIN_THREADS (0 = auto)
/// unless an explicit value was set with set_worker_count.
inline unsigned worker_count() {
    int forced = detail::worker_override().load();
    long requested = 0;
    if (forced >= 0) {
        requested = forced;
    } else if (const char* env = std::getenv("POLYKIN_THREADS")) {
        char* end = nullptr;
        requested = std::strtol(env, &end, 10);
        if (end == env || requested < 0) requested = 0;
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(requested);
}

/// Overrides POLYKIN_THREADS for the current process; a negative value
/// restores the environment lookup.
inline void set_worker_count(int n) { detail::worker_override().store(n); }

/// Calls fn(task) for every task in [0, n_tasks). Tasks may run on any
/// worker in any order; fn must only write task-private state. The first
/// exception thrown by any task is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n_tasks, Fn&& fn) {
    if (n_tasks == 0) return;
    const std::size_t workers = std::min<std::size_t>(worker_count(), n_tasks);
    if (workers <= 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_tasks);
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Deterministic parallel sum of term(i) for i in [0, n). Chunks have a fixed
/// size; partial sums are merged in chunk order.
template <class Term>
double parallel_sum(std::size_t n, Term&& term, std::size_t chunk = 4096) {
    if (n == 0) return 0.0;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(n_chunks, [&](std::size_t c) {
        CompensatedSum acc;
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) acc += term(i);
        partial[c] = acc.value();
    });
    CompensatedSum total;
    for (double p : partial) total += p;
    return total.value();
}

}  // namespace polykin
