#pragma once

// Independent reference computations. Nothing here calls the code paths it
// is used to check.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vodsim/flow_network.hpp"
#include "vodsim/ids.hpp"
#include "vodsim/model.hpp"
#include "vodsim/piece_policy.hpp"
#include "vodsim/random.hpp"

namespace vodsim::oracle {

// ---- piece selection -------------------------------------------------------

/// A small piece-selection problem with per-block state spelled out.
struct PickInstance {
  std::uint32_t pieces = 0;
  std::uint32_t blocks_per_piece = 0;
  std::vector<std::vector<bool>> local;      // [piece][block] held
  std::vector<std::vector<bool>> inflight;   // [piece][block] requested
  std::vector<std::vector<bool>> neighbors;  // [neighbor][piece] held
  std::size_t remote = 0;                    // index into neighbors
  std::uint32_t window_base = 0;
  std::uint32_t window_size = 1;
};

PickInstance random_pick_instance(Rng& rng, std::uint32_t max_pieces = 8,
                                  std::uint32_t max_neighbors = 5);

/// Every answer the selection rules allow. Empty when nothing can be requested.
std::set<BlockRef> admissible_requests(const PickInstance& inst);

struct PickInputs {
  Bitfield local;
  Bitfield remote;
  BlockSet inflight;
  AdwisWindow window;
  std::vector<std::uint32_t> avail;
};

/// The same instance in the library's types.
PickInputs to_inputs(const PickInstance& inst);

// ---- rate allocation -------------------------------------------------------

FlowGraph random_flow_graph(Rng& rng, std::uint32_t max_peers = 6);

/// Equal split of each sender's capacity over its transfers, then
/// proportional scaling at any over-subscribed receiver.
std::vector<double> two_stage_rates(const FlowGraph& g);

/// Max-min fair rates by progressive filling over sender and receiver caps.
std::vector<double> max_min_rates(const FlowGraph& g);

// ---- interactive model -----------------------------------------------------

struct FrequencyCheck {
  std::vector<std::uint64_t> counts;
  std::vector<double> expected;
  std::vector<double> sigma;
  double worst_z = 0.0;  // max |count - expected| / sigma over outcomes
  bool within(double z) const { return worst_z <= z; }
};

/// Tallies `draws` Play transitions and compares them with the profile.
FrequencyCheck play_transition_frequencies(const InteractiveProfile& profile,
                                           std::uint64_t draws, std::uint64_t seed);

// ---- statistics ------------------------------------------------------------

/// Sample mean and t-interval half-width using a tabulated 97.5% quantile
/// (degrees of freedom 1..30).
double t_halfwidth_975(const std::vector<double>& xs);

}  // namespace vodsim::oracle
