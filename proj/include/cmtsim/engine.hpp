#pragma once

// Deterministic discrete-event core: clock, cancellable event queue and
// named random streams derived from one master seed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cmtsim {

/// Simulation time in seconds.
using SimTime = double;

/// Handle returned by EventQueue::schedule, used for cancellation.
struct EventToken {
  std::uint64_t seq{0};
  bool valid() const { return seq != 0; }
};

struct RunStats {
  std::uint64_t dispatched{0};
};

class EventQueue {
 public:
  using Action = std::function<void()>;
  /// Observer invoked before each dispatch with (fire_at, seq).
  using DispatchHook = std::function<void(SimTime, std::uint64_t)>;

  SimTime now() const { return now_; }
  std::size_t pending() const { return live_; }
  std::uint64_t dispatched() const { return dispatched_; }

  EventToken schedule(SimTime fire_at, Action action) {
    if (!std::isfinite(fire_at)) {
      throw std::logic_error("EventQueue: non-finite event time");
    }
    if (fire_at < now_) {
      throw std::logic_error("EventQueue: scheduling in the past");
    }
    const std::uint64_t seq = state_.size();
    state_.push_back(kPending);
    heap_.push(Entry{fire_at, seq, std::move(action)});
    ++live_;
    return EventToken{seq};
  }

  EventToken schedule_in(SimTime delay, Action action) {
    return schedule(now_ + delay, std::move(action));
  }

  /// Cancelling a token that already fired or was cancelled is a no-op.
  void cancel(EventToken& token) {
    if (token.valid() && token.seq < state_.size() &&
        state_[token.seq] == kPending) {
      state_[token.seq] = kCancelled;
      --live_;
    }
    token = EventToken{};
  }

  /// Dispatches every event with fire_at <= t_end in (fire_at, seq) order.
  /// Afterwards the clock is t_end, or the last dispatch time if the queue
  /// drained (or stop() was called) first.
  RunStats run_until(SimTime t_end) {
    if (t_end < now_) {
      throw std::logic_error("EventQueue: run_until into the past");
    }
    RunStats stats;
    stopped_ = false;
    while (!heap_.empty() && !stopped_) {
      const Entry& top = heap_.top();
      if (state_[top.seq] == kCancelled) {
        heap_.pop();
        continue;
      }
      if (top.fire_at > t_end) break;
      Entry entry = std::move(const_cast<Entry&>(top));
      heap_.pop();
      state_[entry.seq] = kFired;
      --live_;
      now_ = entry.fire_at;
      if (hook_) hook_(entry.fire_at, entry.seq);
      entry.action();
      ++stats.dispatched;
      ++dispatched_;
    }
    if (!stopped_ && live_ > 0) now_ = t_end;
    return stats;
  }

  /// Ends the current run_until loop once the running handler returns.
  void stop() { stopped_ = true; }

  void set_dispatch_hook(DispatchHook hook) { hook_ = std::move(hook); }

 private:
  static constexpr std::uint8_t kPending = 0;
  static constexpr std::uint8_t kFired = 1;
  static constexpr std::uint8_t kCancelled = 2;

  struct Entry {
    SimTime fire_at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  // Index 0 is reserved so that a default token is never valid.
  std::vector<std::uint8_t> state_{kFired};
  std::size_t live_{0};
  std::uint64_t dispatched_{0};
  SimTime now_{0.0};
  bool stopped_{false};
  DispatchHook hook_;
};

/// 64-bit FNV-1a, used to turn stream labels into seed material.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named random stream. The generator and the uniform mapping are both fully
/// specified (mt19937_64 plus a 53-bit mantissa fill), so draws are identical
/// across platforms and standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string name)
      : name_(std::move(name)),
        seed_(splitmix64(master_seed ^ splitmix64(fnv1a64(name_)))),
        gen_(seed_) {}

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }

  /// Uniform real in [0, 1).
  double draw_uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

 private:
  std::string name_;
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace cmtsim
