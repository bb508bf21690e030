// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace eov {

/// Multi-producer multi-consumer FIFO. A capacity of 0 means unbounded.
/// After close(), push() is refused and pop() drains what is left, then
/// returns nullopt.
template <typename T>
class BlockingQueue {
public:
    explicit BlockingQueue(std::size_t capacity = 0) : capacity_(capacity) {}

    bool push(T value)
    {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return closed_ || capacity_ == 0 || items_.size() < capacity_; });
        if (closed_) {
            return false;
        }
        items_.push_back(std::move(value));
        lock.unlock();
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop()
    {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        return take_locked(lock);
    }

    template <typename Rep, typename Period>
    std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout)
    {
        std::unique_lock lock(mu_);
        not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        return take_locked(lock);
    }

    void close()
    {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    bool closed() const
    {
        std::lock_guard lock(mu_);
        return closed_;
    }

    std::size_t size() const
    {
        std::lock_guard lock(mu_);
        return items_.size();
    }

private:
    std::optional<T> take_locked(std::unique_lock<std::mutex>& lock)
    {
        if (items_.empty()) {
            return std::nullopt;
        }
        T value = std::move(items_.front());
        items_.pop_front();
        lock.unlock();
        not_full_.notify_one();
        return value;
    }

    mutable std::mutex mu_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    std::size_t capacity_;
    bool closed_ = false;
};

/// Fixed-size worker pool. Tasks run in submission order per worker pick-up;
/// the destructor drains queued tasks before joining.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers)
    {
        if (workers == 0) {
            workers = 1;
        }
        threads_.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) {
            threads_.emplace_back([this] {
                while (auto task = tasks_.pop()) {
                    (*task)();
                }
            });
        }
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool()
    {
        tasks_.close();
        for (auto& t : threads_) {
            t.join();
        }
    }

    void submit(std::function<void()> task) { tasks_.push(std::move(task)); }
    std::size_t workers() const noexcept { return threads_.size(); }

private:
    BlockingQueue<std::function<void()>> tasks_;
    std::vector<std::thread> threads_;
};

/// Counts outstanding work items and lets one thread wait for all of them.
class WaitGroup {
public:
    void add(std::size_t n = 1)
    {
        std::lock_guard lock(mu_);
        pending_ += n;
    }
    void done()
    {
        std::lock_guard lock(mu_);
        if (--pending_ == 0) {
            cv_.notify_all();
        }
    }
    void wait()
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return pending_ == 0; });
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t pending_ = 0;
};

unsigned hardware_threads() noexcept;

} // namespace eov
