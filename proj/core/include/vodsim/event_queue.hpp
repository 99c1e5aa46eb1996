#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "vodsim/ids.hpp"

namespace vodsim {

enum class EventKind : std::uint8_t {
  BlockComplete,
  ReevalTick,
  OptimisticTick,
  InteractiveAction,
  PlaybackBoundary,
  Arrival,
  Departure,
};

const char* to_string(EventKind kind);

using EventId = std::uint64_t;

struct Event {
  double time_s = 0.0;
  EventId seq = 0;  // insertion order; doubles as the cancel handle
  EventKind kind = EventKind::ReevalTick;
  PeerId peer = kNoPeer;
  PeerId other = kNoPeer;
};

/// Min-queue ordered by (time_s, seq). Cancellation is lazy: cancelled entries
/// stay in the heap and are skipped on pop.
class EventQueue {
 public:
  /// Throws std::logic_error when time_s is earlier than the current clock.
  EventId schedule(double time_s, EventKind kind, PeerId peer = kNoPeer, PeerId other = kNoPeer);

  /// Returns false if the event already fired, was cancelled, or never existed.
  bool cancel(EventId id);

  /// Removes and returns the next live event, advancing the clock to it.
  std::optional<Event> pop();

  /// Next live event without removing it.
  const Event* peek();

  double now() const { return now_; }
  std::size_t pending() const { return live_count_; }
  bool empty() const { return live_count_ == 0; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time_s != b.time_s) return a.time_s > b.time_s;
      return a.seq > b.seq;
    }
  };

  void drop_dead();

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::vector<bool> live_;  // indexed by seq
  std::size_t live_count_ = 0;
  EventId next_seq_ = 0;
  double now_ = 0.0;
};

}  // namespace vodsim
