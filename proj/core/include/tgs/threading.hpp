#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tgs {

// Minimal persistent worker pool. parallel_for partitions [begin, end) into
// contiguous chunks; the caller guarantees chunks touch disjoint data, so any
// scheduling yields the same result.
class ThreadPool {
public:
    explicit ThreadPool(int threads);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int thread_count() const { return static_cast<int>(workers_.size()) + 1; }

    // fn(chunk_begin, chunk_end) over [begin, end); runs inline when the pool
    // has no workers or the range is a single chunk.
    void parallel_for(int begin, int end, const std::function<void(int, int)>& fn);

    // Hardware default, overridable by the TURBO_SPLAT_THREADS env var.
    static int resolve_thread_count(int requested);

private:
    struct Task {
        const std::function<void(int, int)>* fn = nullptr;
        int begin = 0;
        int end = 0;
    };

    void worker_loop();
    bool pop_chunk(int& b, int& e);

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable cv_work_;
    std::condition_variable cv_done_;
    const std::function<void(int, int)>* fn_ = nullptr;
    int next_ = 0;
    int end_ = 0;
    int chunk_ = 1;
    int active_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace tgs
