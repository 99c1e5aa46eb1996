#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vodsim/ids.hpp"

namespace vodsim {

enum class ObservationKind : std::uint8_t {
  Join,              // value = down_bps
  StartupComplete,   // value = startup delay (s)
  Interruption,      // playback hit a missing piece
  Resume,            // value = wait since the interruption (s)
  BlockDelivered,    // other = sender, value = bytes
  DownloadComplete,  // leecher became a seeder
  SlotIdle,          // value = integral of idle_slots / x over residence (s)
  Departure,
  Unchoke,  // other = remote
  Choke,    // other = remote
  Jump,     // other = target piece
};

const char* to_string(ObservationKind kind);

struct Observation {
  double time_s = 0.0;
  ObservationKind kind = ObservationKind::Join;
  PeerId peer = kNoPeer;
  PeerId other = kNoPeer;
  double value = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Append-only record of what a run produced.
class RunTrace {
 public:
  void append(const Observation& o) { records_.push_back(o); }
  const std::vector<Observation>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// One record per line: time kind peer detail.
  void dump(std::ostream& out) const;

  friend bool operator==(const RunTrace&, const RunTrace&) = default;

 private:
  std::vector<Observation> records_;
};

}  // namespace vodsim
