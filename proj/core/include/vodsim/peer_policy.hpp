#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vodsim/ids.hpp"
#include "vodsim/model.hpp"
#include "vodsim/random.hpp"

namespace vodsim {

inline constexpr double kRateHorizonS = 20.0;

/// Rolling byte counters per remote over the last kRateHorizonS seconds.
/// Remotes that never exchanged data report exactly zero.
class RateEstimator {
 public:
  void record_received(PeerId from, double bytes, double now_s);
  void record_sent(PeerId to, double bytes, double now_s);
  void forget(PeerId remote);

  double received_from_bps(PeerId remote, double now_s) const;
  double sent_to_bps(PeerId remote, double now_s) const;
  double download_bps(double now_s) const;
  double upload_bps(double now_s) const;

 private:
  struct Window {
    std::deque<std::pair<double, double>> samples;  // (time, bytes)
    void add(double bytes, double now_s);
    double rate(double now_s) const;
  };
  static double rate_of(const std::unordered_map<PeerId, Window>& m, PeerId id, double now_s);

  std::unordered_map<PeerId, Window> received_;
  std::unordered_map<PeerId, Window> sent_;
  Window download_;
  Window upload_;
};

enum class Role { Leecher, Seeder };
enum class TickKind { Regular, Optimistic };

/// What a local peer knows about one interested remote at a tick.
struct RemoteView {
  PeerId id = kNoPeer;
  double received_from_bps = 0.0;  // remote -> local
  double sent_to_bps = 0.0;        // local -> remote
  std::optional<double> last_unchoke_s;
  std::uint32_t playback_piece = 0;
};

/// Upload slots of one peer. `altruistic` holds optimistic slots for
/// Original/SBNP and quota slots for QBPS.
struct SlotAssignment {
  std::vector<PeerId> regular;
  std::vector<PeerId> altruistic;
  Role role = Role::Leecher;

  std::size_t size() const { return regular.size() + altruistic.size(); }
  bool contains(PeerId id) const;
  std::vector<PeerId> all() const;  // sorted
};

struct ChokeDiff {
  std::vector<PeerId> choke;    // sorted
  std::vector<PeerId> unchoke;  // sorted
  bool empty() const { return choke.empty() && unchoke.empty(); }
};

ChokeDiff diff_assignments(const SlotAssignment& before, const SlotAssignment& after);

/// Reciprocation slots plus optimistic slots. Leechers rank by
/// received_from_bps, seeders by sent_to_bps; ties break randomly. On a
/// Regular tick the current optimistic occupants are kept while still
/// interested.
SlotAssignment original_unchoke(Role role, std::span<const RemoteView> interested,
                                const SlotAssignment& current, TickKind tick,
                                const PolicyParams& params, Rng& rng);

/// Leechers: x_1 reciprocation + x_2 optimistic slots. Seeders: all x slots
/// to the most recently unchoked remotes (never-unchoked rank last).
SlotAssignment sbnp_unchoke(Role role, std::span<const RemoteView> interested,
                            const SlotAssignment& current, TickKind tick,
                            const PolicyParams& params, Rng& rng);

/// Leechers: quota slots for remotes slower than the local download rate,
/// closest playback point first (ties by id), at most max_quota; remaining
/// slots by reciprocation. Quota is recomputed only on Optimistic ticks.
/// Seeders behave as in original_unchoke.
SlotAssignment qbps_unchoke(Role role, std::span<const RemoteView> interested,
                            double local_download_bps, std::uint32_t local_playback_piece,
                            const SlotAssignment& current, TickKind tick,
                            const PolicyParams& params, Rng& rng);

/// Quota occupants a QBPS leecher would pick from `interested` (no randomness).
std::vector<PeerId> qbps_quota_candidates(std::span<const RemoteView> interested,
                                          double local_download_bps,
                                          std::uint32_t local_playback_piece,
                                          std::uint32_t max_quota);

/// Per-peer choking state: current slots, tick counter and unchoke history.
class PeerSelector {
 public:
  explicit PeerSelector(PolicyParams params) : params_(params) {}

  /// Kind of the next tick: every k-th tick (starting with the first) is
  /// Optimistic.
  TickKind next_tick_kind() const {
    return tick_count_ % params_.k == 0 ? TickKind::Optimistic : TickKind::Regular;
  }

  /// Re-evaluates the slots and returns the choke/unchoke messages to send.
  ChokeDiff on_tick(Role role, std::span<const RemoteView> interested,
                    double local_download_bps, std::uint32_t local_playback_piece,
                    TickKind tick, double now_s, Rng& rng);

  /// Drops `remote` from the slots without a message (it left or lost
  /// interest); the slot stays empty until the next tick.
  bool release(PeerId remote);

  std::optional<double> last_unchoke(PeerId remote) const;
  const SlotAssignment& slots() const { return current_; }
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
  SlotAssignment current_;
  std::unordered_map<PeerId, double> last_unchoke_;
  std::uint64_t tick_count_ = 0;
};

}  // namespace vodsim
