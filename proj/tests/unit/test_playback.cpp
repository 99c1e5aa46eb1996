#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "vodsim/playback.hpp"

using namespace vodsim;

namespace {

InteractiveProfile continuous_play() {
  auto p = interactive_profile(Profile::LI);
  p.play_transition = {1.0, 0.0, 0.0, 0.0, 0.0};
  return p;
}

MediaGeometry default_geometry() { return media_geometry(MediaFile{}); }

// Advances a session through its own transition points up to `until`. When
// the session is waiting for data it either stops there or jumps the clock
// to `until`.
std::vector<PlaybackObservation> drive(PlaybackSession& s, double& now, double until,
                                       const Bitfield& have, Rng& rng,
                                       bool stop_when_waiting = false) {
  std::vector<PlaybackObservation> all = s.advance_to(now, have, rng);
  while (!s.ended() && now < until) {
    const double step = s.time_to_next();
    if (std::isinf(step) && stop_when_waiting) break;
    const double next = std::isinf(step) ? until : std::min(until, now + step);
    auto obs = s.advance_to(next, have, rng);
    all.insert(all.end(), obs.begin(), obs.end());
    now = next;
  }
  return all;
}

int count(const std::vector<PlaybackObservation>& obs, PlaybackSignal s) {
  int n = 0;
  for (const auto& o : obs) n += o.signal == s;
  return n;
}

}  // namespace

TEST(MarkovModel, PlayTransitionsMatchProfiles) {
  std::uint64_t seed = 10;
  for (auto p : {Profile::HI, Profile::MI, Profile::LI}) {
    auto fc = oracle::play_transition_frequencies(interactive_profile(p), 100'000, seed++);
    EXPECT_TRUE(fc.within(3.0)) << to_string(p) << " worst z " << fc.worst_z;
  }
}

TEST(MarkovModel, IntermediateStatesReturnToPlay) {
  auto hi = interactive_profile(Profile::HI);
  Rng rng(3);
  for (auto s : {InteractiveState::Pause, InteractiveState::JumpBackward, InteractiveState::JumpForward})
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(next_action(hi, s, rng).kind, InteractiveState::Play);
  EXPECT_THROW(next_action(hi, InteractiveState::Stop, rng), std::logic_error);
}

TEST(MarkovModel, DwellTimesAreExponentialWithProfileMeans) {
  auto hi = interactive_profile(Profile::HI);
  Rng rng(8);
  double sum = 0.0;
  const int n = 100'000;
  int pauses = 0;
  for (int i = 0; i < n; ++i) {
    auto a = next_action(hi, InteractiveState::Play, rng);
    if (a.kind == InteractiveState::Pause) {
      sum += a.dwell_s;
      ++pauses;
    }
    if (a.kind == InteractiveState::Stop) EXPECT_EQ(a.dwell_s, 0.0);
  }
  EXPECT_NEAR(sum / pauses, 1.0, 4.0 / std::sqrt(pauses));
}

TEST(ApplyJump, BackwardAtStartIsANoOp) {
  Rng rng(1);
  SessionState s;
  InteractiveAction a{InteractiveState::JumpBackward, 0.75, std::nullopt};
  auto next = apply_jump(s, a, default_geometry(), rng);
  EXPECT_EQ(next.playback_piece, 0u);
  EXPECT_EQ(next.state, InteractiveState::Play);
  EXPECT_EQ(a.kind, InteractiveState::Play);
}

TEST(ApplyJump, ForwardNearTheEnd) {
  Rng rng(1);
  SessionState s;
  s.playback_piece = 78;
  InteractiveAction a{InteractiveState::JumpForward, 0.75, std::nullopt};
  EXPECT_EQ(apply_jump(s, a, default_geometry(), rng).playback_piece, 79u);
  s.playback_piece = 79;
  InteractiveAction b{InteractiveState::JumpForward, 0.75, std::nullopt};
  EXPECT_EQ(apply_jump(s, b, default_geometry(), rng).playback_piece, 79u);
  EXPECT_EQ(b.kind, InteractiveState::Play);
}

TEST(ApplyJump, ForwardTargetsAreUniform) {
  Rng rng(12);
  SessionState s;
  s.playback_piece = 10;
  std::map<std::uint32_t, int> hist;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    InteractiveAction a{InteractiveState::JumpForward, 0.75, std::nullopt};
    ++hist[apply_jump(s, a, default_geometry(), rng).playback_piece];
  }
  ASSERT_EQ(hist.size(), 69u);
  EXPECT_EQ(hist.begin()->first, 11u);
  EXPECT_EQ(hist.rbegin()->first, 79u);
  const double e = n / 69.0;
  double chi2 = 0.0;
  for (auto [_, c] : hist) chi2 += (c - e) * (c - e) / e;
  // 68 degrees of freedom; the 99.9% point is about 111.
  EXPECT_LT(chi2, 111.0);
}

TEST(ApplyJump, BackwardTargetsStayBehind) {
  Rng rng(2);
  SessionState s;
  s.playback_piece = 30;
  for (int i = 0; i < 1000; ++i) {
    InteractiveAction a{InteractiveState::JumpBackward, 0.75, std::nullopt};
    auto n = apply_jump(s, a, default_geometry(), rng);
    EXPECT_LT(n.playback_piece, 30u);
    EXPECT_EQ(*a.jump_target, n.playback_piece);
  }
}

TEST(PlaybackSession, StartupWaitsForThreeContiguousPieces) {
  auto g = default_geometry();
  Rng rng(1);
  PlaybackSession s(continuous_play(), g, 3, 0.0, rng);
  Bitfield have(g.piece_count, g.blocks_per_piece);
  EXPECT_TRUE(std::isinf(s.time_to_next()));
  have.add_piece(0);
  have.add_piece(1);
  EXPECT_TRUE(s.advance_to(17.0, have, rng).empty());
  have.add_piece(2);
  const double t = 3 * g.piece_play_duration_s;
  auto obs = s.advance_to(t, have, rng);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].signal, PlaybackSignal::StartupComplete);
  EXPECT_NEAR(obs[0].value, 26.2144, 1e-9);
}

TEST(PlaybackSession, LateArrivalIsOneInterruption) {
  auto g = default_geometry();
  Rng rng(1);
  PlaybackSession s(continuous_play(), g, 3, 0.0, rng);
  Bitfield have(g.piece_count, g.blocks_per_piece);
  for (std::uint32_t p = 0; p < g.piece_count; ++p)
    if (p != 5) have.add_piece(p);
  double now = 0.0;
  auto obs = drive(s, now, 1000.0, have, rng, true);
  ASSERT_EQ(count(obs, PlaybackSignal::Interruption), 1);
  EXPECT_EQ(s.state().playback_piece, 5u);
  EXPECT_TRUE(s.state().stalled);
  const double stalled_at = now;
  have.add_piece(5);
  obs = s.advance_to(stalled_at + 4.0, have, rng);
  ASSERT_EQ(count(obs, PlaybackSignal::Resume), 1);
  EXPECT_NEAR(obs.back().value, 4.0, 1e-9);
  now = stalled_at + 4.0;
  drive(s, now, 1e6, have, rng);
  EXPECT_TRUE(s.ended());
  EXPECT_EQ(s.interruptions(), 1u);
  EXPECT_EQ(s.resumes(), 1u);
}

TEST(PlaybackSession, FullBufferNeverStalls) {
  auto g = default_geometry();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    PlaybackSession s(interactive_profile(Profile::HI), g, 3, 0.0, rng);
    auto have = Bitfield::full(g.piece_count, g.blocks_per_piece);
    double now = 0.0;
    auto obs = drive(s, now, 1e6, have, rng);
    EXPECT_TRUE(s.ended());
    EXPECT_EQ(count(obs, PlaybackSignal::Interruption), 0);
    EXPECT_EQ(count(obs, PlaybackSignal::Ended), 1);
  }
}

TEST(PlaybackSession, UninterruptedSessionLastsTheMediaLength) {
  auto g = default_geometry();
  Rng rng(4);
  PlaybackSession s(continuous_play(), g, 3, 100.0, rng);
  auto have = Bitfield::full(g.piece_count, g.blocks_per_piece);
  double now = 100.0;
  drive(s, now, 1e6, have, rng);
  EXPECT_NEAR(now, 100.0 + 80 * g.piece_play_duration_s, 1e-6);
}

TEST(PlaybackSession, InvariantsHoldAcrossRandomSessions) {
  auto g = default_geometry();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    Rng fill(seed + 1000);
    PlaybackSession s(interactive_profile(Profile::HI), g, 3, 0.0, rng);
    Bitfield have(g.piece_count, g.blocks_per_piece);
    double now = 0.0;
    std::vector<PlaybackObservation> all;
    while (!s.ended() && now < 20'000.0) {
      // A piece arrives every few seconds in random order.
      const double arrival = now + 3.0;
      auto obs = drive(s, now, arrival, have, rng);
      all.insert(all.end(), obs.begin(), obs.end());
      if (!have.complete()) {
        std::uint32_t p;
        do p = std::uniform_int_distribution<std::uint32_t>(0, g.piece_count - 1)(fill);
        while (have.has_piece(p));
        have.add_piece(p);
      }
      obs = s.advance_to(now, have, rng);
      all.insert(all.end(), obs.begin(), obs.end());
      ASSERT_LT(s.state().playback_piece, g.piece_count);
      if (s.state().stalled) {
        ASSERT_EQ(s.state().state, InteractiveState::Play);
        ASSERT_FALSE(have.has_piece(s.state().playback_piece));
      }
    }
    EXPECT_TRUE(s.ended());
    EXPECT_EQ(count(all, PlaybackSignal::Interruption), count(all, PlaybackSignal::Resume));
    EXPECT_EQ(s.interruptions(), s.resumes());
  }
}
