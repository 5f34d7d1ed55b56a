#ifndef COBOT_LIVE_SERVER_HPP
#define COBOT_LIVE_SERVER_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

#include "cobot/protocol.hpp"
#include "cobot/session.hpp"

namespace cobot::live {

/// Thread-safe FIFO holding at most `capacity` items; pushing into a full queue
/// drops the oldest item.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Returns false when an item had to be dropped.
  bool push(T item) {
    std::lock_guard lock(mu_);
    bool dropped = false;
    if (items_.size() >= capacity_) {
      items_.pop_front();
      dropped = true;
    }
    items_.push_back(std::move(item));
    cv_.notify_one();
    return !dropped;
  }

  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  std::deque<T> drain() {
    std::lock_guard lock(mu_);
    std::deque<T> out;
    out.swap(items_);
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
};

/// Input fed by live clients. All samples that arrived since the previous tick
/// collapse into one: axes from the latest sample, button presses OR-ed.
class QueuedInputSource : public InputSource {
 public:
  explicit QueuedInputSource(std::size_t capacity = 256) : queue_(capacity) {}
  void push(const InputSample& s) { queue_.push(s); }
  std::optional<InputSample> take(std::uint64_t tick) override;

 private:
  BoundedQueue<InputSample> queue_;
};

/// Serves the line protocol on one TCP port. A connection whose first bytes are an
/// HTTP GET is upgraded to a WebSocket (one line per text frame); anything else is
/// treated as a raw newline-delimited stream. Clients must open with a Hello of the
/// current protocol version before they receive session traffic.
class LiveServer {
 public:
  explicit LiveServer(std::uint16_t port, std::size_t outbound_capacity = 1 << 15);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Bound port (useful when constructed with port 0).
  std::uint16_t port() const;

  /// Blocks until at least one client completed the handshake.
  bool waitForClient(std::chrono::milliseconds timeout);
  std::size_t clientCount() const;

  /// Sends to every handshaken client. The most recent Hello is remembered and
  /// greets clients that join later.
  void broadcast(const protocol::Message& m);

  /// Waits until every outbound queue is empty.
  bool flush(std::chrono::milliseconds timeout);

  QueuedInputSource& inputs();

  void stop();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cobot::live

#endif  // COBOT_LIVE_SERVER_HPP
