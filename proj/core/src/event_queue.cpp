#include "vodsim/event_queue.hpp"

#include <stdexcept>
#include <string>

namespace vodsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::BlockComplete: return "block_complete";
    case EventKind::ReevalTick: return "reeval_tick";
    case EventKind::OptimisticTick: return "optimistic_tick";
    case EventKind::InteractiveAction: return "interactive_action";
    case EventKind::PlaybackBoundary: return "playback_boundary";
    case EventKind::Arrival: return "arrival";
    case EventKind::Departure: return "departure";
  }
  return "unknown";
}

EventId EventQueue::schedule(double time_s, EventKind kind, PeerId peer, PeerId other) {
  if (time_s < now_)
    throw std::logic_error("event scheduled in the past: t=" + std::to_string(time_s) +
                           " now=" + std::to_string(now_));
  EventId id = next_seq_++;
  heap_.push(Event{time_s, id, kind, peer, other});
  live_.push_back(true);
  ++live_count_;
  return id;
}

bool EventQueue::cancel(EventId id) {
  if (id >= live_.size() || !live_[id]) return false;
  live_[id] = false;
  --live_count_;
  return true;
}

void EventQueue::drop_dead() {
  while (!heap_.empty() && !live_[heap_.top().seq]) heap_.pop();
}

const Event* EventQueue::peek() {
  drop_dead();
  return heap_.empty() ? nullptr : &heap_.top();
}

std::optional<Event> EventQueue::pop() {
  drop_dead();
  if (heap_.empty()) return std::nullopt;
  Event ev = heap_.top();
  heap_.pop();
  live_[ev.seq] = false;
  --live_count_;
  now_ = ev.time_s;
  return ev;
}

}  // namespace vodsim
