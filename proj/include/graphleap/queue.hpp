#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

#include "graphleap/errors.hpp"

namespace graphleap {

// Bounded FIFO connecting one producer to one consumer. push() blocks while
// full; pop() blocks while empty and returns nullopt once the producer has
// called finish() and the buffer drained. close() is the consumer-side abort:
// subsequent (and blocked) push() calls throw QueueClosed.
template <typename T>
class BoundedQueue {
  public:
    explicit BoundedQueue(size_t capacity) : capacity_(capacity ? capacity : 1) {}

    void push(T item) {
        std::unique_lock lk(m_);
        not_full_.wait(lk, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) throw QueueClosed("queue closed by consumer");
        items_.push_back(std::move(item));
        if (items_.size() > high_water_) high_water_ = items_.size();
        not_empty_.notify_one();
    }

    std::optional<T> pop() {
        std::unique_lock lk(m_);
        not_empty_.wait(lk, [&] { return !items_.empty() || finished_ || closed_; });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    // Producer signals end-of-stream.
    void finish() {
        std::lock_guard lk(m_);
        finished_ = true;
        not_empty_.notify_all();
    }

    // Consumer abandons the stream.
    void close() {
        std::lock_guard lk(m_);
        closed_ = true;
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    size_t capacity() const { return capacity_; }

    // Peak occupancy, for the queue-discipline checks.
    size_t high_water() const {
        std::lock_guard lk(m_);
        return high_water_;
    }

  private:
    const size_t capacity_;
    mutable std::mutex m_;
    std::condition_variable not_full_, not_empty_;
    std::deque<T> items_;
    bool finished_ = false;
    bool closed_ = false;
    size_t high_water_ = 0;
};

}  // namespace graphleap
