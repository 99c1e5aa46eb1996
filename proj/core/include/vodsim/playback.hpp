#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "vodsim/model.hpp"
#include "vodsim/piece_policy.hpp"
#include "vodsim/random.hpp"

namespace vodsim {

/// Values index InteractiveProfile arrays.
enum class InteractiveState : std::uint8_t {
  Play = 0,
  Stop = 1,
  Pause = 2,
  JumpBackward = 3,
  JumpForward = 4,
};

const char* to_string(InteractiveState s);

struct InteractiveAction {
  InteractiveState kind = InteractiveState::Play;
  double dwell_s = 0.0;
  std::optional<std::uint32_t> jump_target;
};

struct SessionState {
  InteractiveState state = InteractiveState::Play;
  std::uint32_t playback_piece = 0;
  double offset_s = 0.0;  // position within playback_piece
  bool startup_complete = false;
  bool stalled = false;
};

/// Draws the next interactive state and its dwell. From Play the successor
/// follows the profile's transition vector; Pause, JB and JF always return
/// to Play. The dwell is exponential with the entered state's mean.
/// Throws std::logic_error when called in Stop.
InteractiveAction next_action(const InteractiveProfile& profile, InteractiveState current,
                              Rng& rng);

/// Moves the playback point for a JF/JB action. JF lands uniformly in
/// (current, last], JB uniformly in [0, current). An empty range turns the
/// action into Play at the current position. Sets action.jump_target when
/// the jump happens.
SessionState apply_jump(const SessionState& state, InteractiveAction& action,
                        const MediaGeometry& media, Rng& rng);

enum class PlaybackSignal : std::uint8_t {
  StartupComplete,  // value = startup delay
  Interruption,
  Resume,        // value = wait
  PieceEntered,  // piece = new playback piece
  Jump,          // piece = target
  Ended,
};

struct PlaybackObservation {
  PlaybackSignal signal;
  double value = 0.0;
  std::uint32_t piece = 0;
};

/// One viewer's session: startup buffering, playback, stalls, interactive
/// actions and departure.
///
/// Play dwell times are measured in watched media time, so buffering and
/// stalls do not consume them. Pause and jump dwells are wall time. Startup
/// and post-jump buffering wait until `theta` contiguous pieces (or the rest
/// of the file) are held; an ordinary stall resumes as soon as the missing
/// piece arrives.
class PlaybackSession {
 public:
  enum class Phase : std::uint8_t { Buffering, Playing, Stalled, Dwelling, Ended };

  PlaybackSession(const InteractiveProfile& profile, const MediaGeometry& media,
                  std::uint32_t theta, double start_s, Rng& rng);

  const SessionState& state() const { return state_; }
  Phase phase() const { return phase_; }
  bool ended() const { return phase_ == Phase::Ended; }

  /// Seconds until the next self-driven transition, infinity when waiting
  /// for data or ended.
  double time_to_next() const;

  /// Moves the clock to now_s (which must not pass time_to_next()) and
  /// processes every transition due at now_s.
  std::vector<PlaybackObservation> advance_to(double now_s, const Bitfield& have, Rng& rng);

  std::uint32_t interruptions() const { return interruptions_; }
  std::uint32_t resumes() const { return resumes_; }

 private:
  void settle(double now_s, const Bitfield& have, Rng& rng, std::vector<PlaybackObservation>& out);
  bool buffered(const Bitfield& have) const;
  double sample_play_dwell(Rng& rng) const;

  InteractiveProfile profile_;
  MediaGeometry media_;
  std::uint32_t theta_;
  SessionState state_;
  Phase phase_ = Phase::Buffering;
  double dwell_left_s_ = 0.0;
  double clock_s_ = 0.0;
  double start_s_ = 0.0;
  double wait_started_s_ = 0.0;
  std::uint32_t interruptions_ = 0;
  std::uint32_t resumes_ = 0;
};

}  // namespace vodsim
