#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vodsim/engine.hpp"
#include "vodsim/model.hpp"
#include "vodsim/peer_policy.hpp"
#include "vodsim/piece_policy.hpp"
#include "vodsim/playback.hpp"
#include "vodsim/random.hpp"
#include "vodsim/trace.hpp"

namespace vodsim {

inline constexpr std::size_t kTrackerListSize = 40;
inline constexpr std::size_t kMaxConnections = 80;

/// Up to `max_peers` distinct members of `population`, uniformly at random,
/// returned in ascending id order.
std::vector<PeerId> tracker_join(std::span<const PeerId> population, Rng& rng,
                                 std::size_t max_peers = kTrackerListSize);

struct SimOptions {
  bool check_invariants = false;
  bool record_choking = false;  // add Choke/Unchoke/Jump records to the trace
};

/// Counts of checked and violated run invariants.
struct InvariantReport {
  std::uint64_t checks = 0;
  std::map<std::string, std::uint64_t> violations;
  std::vector<std::string> samples;  // first few violation messages

  std::uint64_t total_violations() const;
  void fail(const std::string& kind, const std::string& detail);
};

struct RunResult {
  RunTrace trace;
  InvariantReport invariants;
  std::uint64_t events = 0;
  std::uint64_t served = 0;
  std::uint64_t replacements = 0;
};

/// Discrete-event BitTorrent-like VoD swarm with churn.
class Swarm {
 public:
  struct Link {
    bool am_interested = false;    // local wants something the remote holds
    bool peer_interested = false;  // remote wants something local holds
    bool am_unchoking = false;     // local lets the remote request
    bool peer_unchoking = false;   // remote lets local request
    std::uint32_t wanted = 0;      // pieces the remote holds that local lacks
    std::optional<TransferId> download;  // remote -> local block in flight
    std::uint32_t remote_playback = 0;   // last PlaybackPos received
  };

  struct Peer {
    PeerId id = kNoPeer;
    std::uint32_t slot = 0;  // leecher slot index; unused for initial seeders
    CapacityClass capacity;
    Role role = Role::Leecher;
    bool initial_seeder = false;
    bool active = false;
    double join_s = 0.0;
    Bitfield have;
    BlockSet inflight;
    std::vector<std::uint32_t> avail;  // per-piece count over connected remotes
    std::map<PeerId, Link> links;
    PeerSelector selector;
    RateEstimator rates;
    AdwisWindow window;
    std::optional<PlaybackSession> session;
    std::optional<EventId> tick_event;
    std::optional<EventId> playback_event;
    std::uint32_t announced_piece = 0;

    Peer(PeerId id_, PolicyParams params) : id(id_), selector(params) {}
  };

  Swarm(const Scenario& scenario, SimOptions options = {});
  Swarm(const Swarm&) = delete;
  Swarm& operator=(const Swarm&) = delete;

  /// Runs to the scenario's duration. Can be called once.
  RunResult run();

  const Scenario& scenario() const { return scenario_; }
  const Peer& peer(PeerId id) const { return peers_.at(id); }
  std::vector<PeerId> active_peers() const;
  double now() const { return engine_.now(); }

 private:
  PeerId create_peer(std::uint32_t slot, const CapacityClass& capacity, bool seeder);
  void join(PeerId id);
  void connect(PeerId a, PeerId b);
  void disconnect(PeerId a, PeerId b);
  void set_interest(PeerId a, PeerId b);
  void try_request(PeerId receiver, PeerId sender);
  void try_requests(PeerId receiver);
  void choke(PeerId local, PeerId remote);
  void unchoke(PeerId local, PeerId remote);
  void cancel_download(PeerId receiver, PeerId sender);

  void on_tick(const Event& ev);
  void on_playback(const Event& ev);
  void on_departure(const Event& ev);
  void on_block_received(const Transfer& t);
  void on_piece_completed(PeerId id, std::uint32_t piece);

  void sync_playback(PeerId id);
  void apply_playback(PeerId id, const std::vector<PlaybackObservation>& obs);
  void announce_playback(PeerId id);
  void reschedule_playback(PeerId id);
  PeerId churn_replace(PeerId departed);

  void check_population(double now);
  void check_flows();
  void check_tick(const Peer& p, std::span<const RemoteView> views, double local_dl,
                  TickKind tick);

  Scenario scenario_;
  SimOptions options_;
  Rng rng_;
  Engine engine_;
  std::deque<Peer> peers_;  // stable references across growth
  std::vector<PeerId> active_;  // sorted
  RunTrace trace_;
  InvariantReport inv_;
  std::uint64_t served_ = 0;
  std::uint64_t replacements_ = 0;
  bool ran_ = false;
};

/// Builds and runs one replication.
RunResult simulate(const Scenario& scenario, SimOptions options = {});

}  // namespace vodsim
