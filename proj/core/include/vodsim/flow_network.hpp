#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vodsim/ids.hpp"

namespace vodsim {

struct FlowEdge {
  PeerId sender = kNoPeer;
  PeerId receiver = kNoPeer;
};

/// Snapshot of the transfer topology. Caps are indexed by PeerId.
struct FlowGraph {
  std::vector<FlowEdge> transfers;
  std::vector<double> up_bps;
  std::vector<double> down_bps;
};

/// Two-stage slot-sharing allocation:
///  1. every sender splits its up cap equally over its busy transfers;
///  2. every receiver offered more than its down cap scales its inflows
///     proportionally down to the cap.
/// Capacity released in stage 2 is not handed back to senders.
std::vector<double> allocate_rates(const FlowGraph& graph);

/// Same computation over caller-owned storage. `scratch_up` and `scratch_down`
/// must be sized to cover every PeerId and be zero on entry; they are zero
/// again on return.
void allocate_rates_into(std::span<const FlowEdge> edges, std::span<const double> up_bps,
                         std::span<const double> down_bps, std::span<double> rates,
                         std::span<double> scratch_up, std::span<double> scratch_down);

using TransferId = std::uint64_t;

struct Transfer {
  TransferId id = 0;
  PeerId sender = kNoPeer;
  PeerId receiver = kNoPeer;
  BlockRef block;
  double size_bytes = 0.0;
  double remaining_bytes = 0.0;
  double delivered_bytes = 0.0;  // integral of rate over time, in bytes
  double rate_bps = 0.0;
  double started_s = 0.0;
};

/// Fluid model of in-flight block transfers with piecewise-constant rates.
///
/// Callers mutate the topology (start/abort/caps), then call reallocate()
/// before asking for the next completion. advance_to() must be called with
/// the current clock before any mutation so progress is integrated at the
/// old rates.
class FlowNetwork {
 public:
  void set_caps(PeerId peer, double up_bps, double down_bps);

  TransferId start(PeerId sender, PeerId receiver, BlockRef block, double size_bytes,
                   double now_s);
  std::optional<Transfer> abort(TransferId id);
  /// Aborts every transfer touching `peer`; returns the removed transfers.
  std::vector<Transfer> abort_all(PeerId peer);

  void advance_to(double now_s);
  void reallocate();

  /// Absolute time of the earliest completion at current rates.
  std::optional<double> next_completion_time() const;
  /// Removes and returns transfers whose remaining bytes fell within
  /// `rel_tol` of zero, in id order.
  std::vector<Transfer> take_completed(double rel_tol = 1e-9);

  bool dirty() const { return dirty_; }
  double clock() const { return clock_; }
  const std::vector<Transfer>& transfers() const { return transfers_; }
  const Transfer* find(TransferId id) const;

  std::uint32_t busy_slots(PeerId peer) const;
  /// Integral over time of the number of busy upload slots of `peer`.
  double busy_slot_seconds(PeerId peer) const;
  double inflow_bps(PeerId peer) const;
  double outflow_bps(PeerId peer) const;
  double up_cap(PeerId peer) const { return peer < up_.size() ? up_[peer] : 0.0; }
  double down_cap(PeerId peer) const { return peer < down_.size() ? down_[peer] : 0.0; }

 private:
  void ensure_peer(PeerId peer);
  void remove_at(std::size_t index);

  std::vector<Transfer> transfers_;
  std::vector<FlowEdge> edges_;  // parallel to transfers_
  std::vector<double> rates_;
  std::unordered_map<TransferId, std::size_t> index_;
  std::vector<double> up_, down_;
  std::vector<std::uint32_t> busy_;
  std::vector<double> busy_seconds_;
  std::vector<double> scratch_up_, scratch_down_;
  TransferId next_id_ = 1;
  double clock_ = 0.0;
  bool dirty_ = false;
};

}  // namespace vodsim
