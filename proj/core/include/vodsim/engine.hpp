#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "vodsim/event_queue.hpp"
#include "vodsim/flow_network.hpp"

namespace vodsim {

/// A handler failed; carries the event that was being processed.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, const Event& event)
      : std::runtime_error(what), event_(event) {}
  const Event& event() const { return event_; }

 private:
  Event event_;
};

/// Discrete-event loop over an EventQueue and a FlowNetwork.
///
/// Block completions are driven internally: whenever a handler leaves the
/// flow network dirty, rates are reallocated and the single pending
/// BlockComplete event is moved to the new earliest finishing time.
class Engine {
 public:
  using Handler = std::function<void(const Event&)>;
  using CompletionHandler = std::function<void(const Transfer&)>;
  using Hook = std::function<void()>;

  void on(EventKind kind, Handler handler);
  void on_block_complete(CompletionHandler handler) { completion_ = std::move(handler); }
  /// Called after every reallocation (used for invariant monitoring).
  void on_reallocated(Hook hook) { reallocated_ = std::move(hook); }
  /// Called before each event is dispatched, after flows are advanced to it.
  void on_advance(std::function<void(double)> hook) { advance_ = std::move(hook); }

  EventQueue& queue() { return queue_; }
  FlowNetwork& flows() { return flows_; }
  const FlowNetwork& flows() const { return flows_; }
  double now() const { return queue_.now(); }

  EventId schedule(double time_s, EventKind kind, PeerId peer = kNoPeer,
                   PeerId other = kNoPeer) {
    return queue_.schedule(time_s, kind, peer, other);
  }
  bool cancel(EventId id) { return queue_.cancel(id); }

  /// Processes events with time <= until, then integrates flows up to `until`.
  /// Handler exceptions are rethrown as SimulationError.
  void run(double until);

  std::uint64_t events_processed() const { return processed_; }

 private:
  void settle();

  EventQueue queue_;
  FlowNetwork flows_;
  std::array<Handler, 7> handlers_;
  CompletionHandler completion_;
  Hook reallocated_;
  std::function<void(double)> advance_;
  std::optional<EventId> pending_completion_;
  std::uint64_t processed_ = 0;
};

}  // namespace vodsim
