#include "vodsim/engine.hpp"

namespace vodsim {

void Engine::on(EventKind kind, Handler handler) {
  handlers_[static_cast<std::size_t>(kind)] = std::move(handler);
}

void Engine::settle() {
  if (!flows_.dirty()) return;
  flows_.reallocate();
  if (reallocated_) reallocated_();
  if (pending_completion_) queue_.cancel(*pending_completion_);
  pending_completion_.reset();
  if (auto t = flows_.next_completion_time())
    pending_completion_ = queue_.schedule(std::max(*t, queue_.now()), EventKind::BlockComplete);
}

void Engine::run(double until) {
  settle();
  while (const Event* next = queue_.peek()) {
    if (next->time_s > until) break;
    Event ev = *queue_.pop();
    ++processed_;
    try {
      flows_.advance_to(ev.time_s);
      if (advance_) advance_(ev.time_s);
      if (ev.kind == EventKind::BlockComplete) {
        pending_completion_.reset();
        auto done = flows_.take_completed();
        for (const auto& t : done)
          if (completion_) completion_(t);
        if (done.empty() && !flows_.dirty()) {
          if (auto t = flows_.next_completion_time())
            pending_completion_ =
                queue_.schedule(std::max(*t, queue_.now()), EventKind::BlockComplete);
        }
      } else {
        auto& h = handlers_[static_cast<std::size_t>(ev.kind)];
        if (!h) throw std::logic_error(std::string("no handler for ") + to_string(ev.kind));
        h(ev);
      }
      settle();
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(std::string(to_string(ev.kind)) + " at t=" +
                                std::to_string(ev.time_s) + ": " + e.what(),
                            ev);
    }
  }
  if (until > flows_.clock()) {
    flows_.advance_to(until);
    if (advance_) advance_(until);
  }
}

}  // namespace vodsim
