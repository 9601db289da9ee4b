#include "tgs/threading.hpp"

#include <algorithm>
#include <cstdlib>

namespace tgs {

ThreadPool::ThreadPool(int threads) {
    const int n = std::max(1, threads);
    for (int i = 0; i < n - 1; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) w.join();
}

int ThreadPool::resolve_thread_count(int requested) {
    if (const char* env = std::getenv("TURBO_SPLAT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    if (requested >= 1) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

bool ThreadPool::pop_chunk(int& b, int& e) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (next_ >= end_) return false;
    b = next_;
    e = std::min(end_, next_ + chunk_);
    next_ = e;
    return true;
}

void ThreadPool::worker_loop() {
    uint64_t seen = 0;
    for (;;) {
        const std::function<void(int, int)>* fn = nullptr;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            cv_work_.wait(lock, [&] { return stop_ || (fn_ && generation_ != seen); });
            if (stop_) return;
            seen = generation_;
            fn = fn_;
            ++active_;
        }
        int b, e;
        while (pop_chunk(b, e)) (*fn)(b, e);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --active_;
        }
        cv_done_.notify_all();
    }
}

void ThreadPool::parallel_for(int begin, int end, const std::function<void(int, int)>& fn) {
    if (begin >= end) return;
    const int span = end - begin;
    if (workers_.empty()) {
        fn(begin, end);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        fn_ = &fn;
        next_ = begin;
        end_ = end;
        chunk_ = std::max(1, span / (thread_count() * 4));
        ++generation_;
    }
    cv_work_.notify_all();
    int b, e;
    while (pop_chunk(b, e)) fn(b, e);
    {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_done_.wait(lock, [&] { return active_ == 0 && next_ >= end_; });
        fn_ = nullptr;
    }
}

} // namespace tgs
