#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gcv {

/// Persistent worker pool. Work is always split into contiguous index ranges
/// assigned by worker rank, so a computation partitions the same way on every
/// run with the same thread count. Any cross-range reduction must be summed in
/// rank order by the caller.
class ThreadPool {
  public:
    static ThreadPool& instance();

    /// Worker count: GC_THREADS env var if set, else hardware concurrency
    /// capped at 8.
    int workers() const { return workers_; }

    /// Runs fn(begin, end, rank) over [0, count) split into `parts` contiguous
    /// chunks (parts <= workers). Blocks until all chunks finish.
    void run_ranges(std::int64_t count, int parts,
                    const std::function<void(std::int64_t, std::int64_t, int)>& fn);

    ~ThreadPool();

  private:
    ThreadPool();

    struct Task {
        const std::function<void(std::int64_t, std::int64_t, int)>* fn{nullptr};
        std::int64_t begin{0}, end{0};
        int rank{0};
    };

    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<Task> queue_;
    int pending_{0};
    bool stop_{false};
    int workers_{1};
};

/// parallel_for_ranges(count, fn): fn(begin, end, rank) over disjoint chunks.
/// rank < parts <= pool workers; with one worker this degenerates to a direct
/// call, keeping single-thread runs allocation-free.
void parallel_for_ranges(std::int64_t count,
                         const std::function<void(std::int64_t, std::int64_t, int)>& fn);

/// Number of chunks parallel_for_ranges will use for `count` items.
int parallel_parts(std::int64_t count);

} // namespace gcv
