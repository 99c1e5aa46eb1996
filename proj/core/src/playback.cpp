#include "vodsim/playback.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vodsim {

namespace {

constexpr double kTimeEps = 1e-9;

double sample_exponential(double mean, Rng& rng) {
  if (mean <= 0.0) return 0.0;
  std::exponential_distribution<double> d(1.0 / mean);
  return d(rng);
}

}  // namespace

const char* to_string(InteractiveState s) {
  switch (s) {
    case InteractiveState::Play: return "play";
    case InteractiveState::Stop: return "stop";
    case InteractiveState::Pause: return "pause";
    case InteractiveState::JumpBackward: return "jb";
    case InteractiveState::JumpForward: return "jf";
  }
  return "?";
}

InteractiveAction next_action(const InteractiveProfile& profile, InteractiveState current,
                              Rng& rng) {
  InteractiveAction a;
  switch (current) {
    case InteractiveState::Stop:
      throw std::logic_error("next_action called in Stop");
    case InteractiveState::Play: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double x = u(rng);
      double acc = 0.0;
      a.kind = InteractiveState::JumpForward;
      for (int i = 0; i < 5; ++i) {
        acc += profile.play_transition[i];
        if (x < acc) {
          a.kind = static_cast<InteractiveState>(i);
          break;
        }
      }
      break;
    }
    default:
      a.kind = InteractiveState::Play;
      break;
  }
  a.dwell_s = sample_exponential(profile.mean_dwell_s[static_cast<int>(a.kind)], rng);
  return a;
}

SessionState apply_jump(const SessionState& state, InteractiveAction& action,
                        const MediaGeometry& media, Rng& rng) {
  SessionState next = state;
  const std::uint32_t cur = state.playback_piece;
  std::uint32_t lo = 0, hi = 0;
  bool feasible = false;
  if (action.kind == InteractiveState::JumpForward) {
    feasible = cur + 1 < media.piece_count;
    lo = cur + 1;
    hi = media.piece_count - 1;
  } else if (action.kind == InteractiveState::JumpBackward) {
    feasible = cur > 0;
    lo = 0;
    hi = cur - (cur > 0 ? 1 : 0);
  } else {
    throw std::logic_error("apply_jump needs a JF or JB action");
  }
  if (!feasible) {
    action.kind = InteractiveState::Play;
    action.jump_target.reset();
    next.state = InteractiveState::Play;
    return next;
  }
  std::uniform_int_distribution<std::uint32_t> d(lo, hi);
  std::uint32_t target = d(rng);
  action.jump_target = target;
  next.state = action.kind;
  next.playback_piece = target;
  next.offset_s = 0.0;
  next.stalled = false;
  return next;
}

PlaybackSession::PlaybackSession(const InteractiveProfile& profile, const MediaGeometry& media,
                                 std::uint32_t theta, double start_s, Rng& rng)
    : profile_(profile),
      media_(media),
      theta_(std::max<std::uint32_t>(1, theta)),
      clock_s_(start_s),
      start_s_(start_s),
      wait_started_s_(start_s) {
  state_.state = InteractiveState::Play;
  dwell_left_s_ = sample_play_dwell(rng);
  phase_ = Phase::Buffering;
}

double PlaybackSession::sample_play_dwell(Rng& rng) const {
  return sample_exponential(profile_.mean_dwell_s[0], rng);
}

bool PlaybackSession::buffered(const Bitfield& have) const {
  std::uint32_t need = std::min(theta_, media_.piece_count - state_.playback_piece);
  return have.contiguity_from(state_.playback_piece) >= need;
}

double PlaybackSession::time_to_next() const {
  switch (phase_) {
    case Phase::Playing:
      return std::max(0.0, std::min(dwell_left_s_, media_.piece_play_duration_s - state_.offset_s));
    case Phase::Dwelling:
      return std::max(0.0, dwell_left_s_);
    default:
      return std::numeric_limits<double>::infinity();
  }
}

std::vector<PlaybackObservation> PlaybackSession::advance_to(double now_s, const Bitfield& have,
                                                             Rng& rng) {
  if (now_s < clock_s_) throw std::logic_error("playback clock moved backwards");
  double dt = now_s - clock_s_;
  if (dt > time_to_next() + 1e-6) throw std::logic_error("playback advanced past a transition");
  if (phase_ == Phase::Playing) {
    state_.offset_s = std::min(state_.offset_s + dt, media_.piece_play_duration_s);
    dwell_left_s_ -= dt;
  } else if (phase_ == Phase::Dwelling) {
    dwell_left_s_ -= dt;
  }
  clock_s_ = now_s;
  std::vector<PlaybackObservation> out;
  settle(now_s, have, rng, out);
  return out;
}

void PlaybackSession::settle(double now_s, const Bitfield& have, Rng& rng,
                             std::vector<PlaybackObservation>& out) {
  for (;;) {
    switch (phase_) {
      case Phase::Ended:
        return;

      case Phase::Buffering:
        if (!buffered(have)) return;
        phase_ = Phase::Playing;
        if (!state_.startup_complete) {
          state_.startup_complete = true;
          out.push_back({PlaybackSignal::StartupComplete, now_s - start_s_, 0});
        } else {
          ++resumes_;
          out.push_back({PlaybackSignal::Resume, now_s - wait_started_s_, 0});
        }
        break;

      case Phase::Stalled:
        if (!have.has_piece(state_.playback_piece)) return;
        phase_ = Phase::Playing;
        state_.stalled = false;
        ++resumes_;
        out.push_back({PlaybackSignal::Resume, now_s - wait_started_s_, 0});
        break;

      case Phase::Playing:
        if (state_.offset_s >= media_.piece_play_duration_s - kTimeEps) {
          state_.offset_s = 0.0;
          ++state_.playback_piece;
          if (state_.playback_piece >= media_.piece_count) {
            state_.playback_piece = media_.piece_count - 1;
            state_.offset_s = media_.piece_play_duration_s;
            phase_ = Phase::Ended;
            state_.state = InteractiveState::Stop;
            out.push_back({PlaybackSignal::Ended, 0.0, state_.playback_piece});
            return;
          }
          out.push_back({PlaybackSignal::PieceEntered, 0.0, state_.playback_piece});
          if (!have.has_piece(state_.playback_piece)) {
            phase_ = Phase::Stalled;
            state_.stalled = true;
            wait_started_s_ = now_s;
            ++interruptions_;
            out.push_back({PlaybackSignal::Interruption, 0.0, state_.playback_piece});
          }
          break;
        }
        if (dwell_left_s_ > kTimeEps) return;
        {
          InteractiveAction a = next_action(profile_, InteractiveState::Play, rng);
          switch (a.kind) {
            case InteractiveState::Play:
              dwell_left_s_ = a.dwell_s;
              break;
            case InteractiveState::Stop:
              phase_ = Phase::Ended;
              state_.state = InteractiveState::Stop;
              out.push_back({PlaybackSignal::Ended, 0.0, state_.playback_piece});
              return;
            case InteractiveState::Pause:
              state_.state = InteractiveState::Pause;
              phase_ = Phase::Dwelling;
              dwell_left_s_ = a.dwell_s;
              break;
            case InteractiveState::JumpBackward:
            case InteractiveState::JumpForward: {
              SessionState next = apply_jump(state_, a, media_, rng);
              if (!a.jump_target) {
                state_ = next;
                dwell_left_s_ = sample_play_dwell(rng);
                break;
              }
              state_ = next;
              phase_ = Phase::Dwelling;
              dwell_left_s_ = a.dwell_s;
              out.push_back({PlaybackSignal::Jump, 0.0, *a.jump_target});
              break;
            }
          }
        }
        break;

      case Phase::Dwelling: {
        if (dwell_left_s_ > kTimeEps) return;
        const bool after_jump = state_.state != InteractiveState::Pause;
        InteractiveAction a = next_action(profile_, state_.state, rng);
        state_.state = a.kind;
        dwell_left_s_ = a.dwell_s;
        if (!after_jump) {
          phase_ = Phase::Playing;
          if (!have.has_piece(state_.playback_piece)) {
            phase_ = Phase::Stalled;
            state_.stalled = true;
            wait_started_s_ = now_s;
            ++interruptions_;
            out.push_back({PlaybackSignal::Interruption, 0.0, state_.playback_piece});
          }
        } else if (have.has_piece(state_.playback_piece)) {
          phase_ = Phase::Playing;
        } else {
          phase_ = Phase::Buffering;
          wait_started_s_ = now_s;
          ++interruptions_;
          out.push_back({PlaybackSignal::Interruption, 0.0, state_.playback_piece});
        }
        break;
      }
    }
  }
}

}  // namespace vodsim
