#include "gcv/threading.hpp"

#include <algorithm>
#include <cstdlib>

namespace gcv {

ThreadPool& ThreadPool::instance() {
    static ThreadPool pool;
    return pool;
}

ThreadPool::ThreadPool() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    n = std::min(n, 8);
    if (const char* env = std::getenv("GC_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) n = cap;
    }
    workers_ = n;
    for (int i = 0; i < workers_ - 1; ++i)
        threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
    for (;;) {
        Task task;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (stop_ && queue_.empty()) return;
            task = queue_.back();
            queue_.pop_back();
        }
        (*task.fn)(task.begin, task.end, task.rank);
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }
}

void ThreadPool::run_ranges(std::int64_t count, int parts,
                            const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
    if (count <= 0) return;
    parts = std::min<std::int64_t>(parts, count);
    if (parts <= 1) {
        fn(0, count, 0);
        return;
    }
    std::int64_t chunk = (count + parts - 1) / parts;
    {
        std::lock_guard<std::mutex> lock(mu_);
        // Rank 0 runs on the calling thread; queue the rest.
        for (int r = parts - 1; r >= 1; --r) {
            std::int64_t b = r * chunk;
            std::int64_t e = std::min<std::int64_t>(b + chunk, count);
            if (b >= e) continue;
            queue_.push_back(Task{&fn, b, e, r});
            ++pending_;
        }
    }
    cv_.notify_all();
    fn(0, std::min<std::int64_t>(chunk, count), 0);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
}

void parallel_for_ranges(std::int64_t count,
                         const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
    ThreadPool& pool = ThreadPool::instance();
    pool.run_ranges(count, pool.workers(), fn);
}

int parallel_parts(std::int64_t count) {
    return static_cast<int>(std::min<std::int64_t>(ThreadPool::instance().workers(),
                                                   std::max<std::int64_t>(count, 1)));
}

} // namespace gcv
