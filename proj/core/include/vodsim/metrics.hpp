#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vodsim/ids.hpp"
#include "vodsim/trace.hpp"

namespace vodsim {

/// What one served peer did over its residence.
struct PeerLedger {
  PeerId peer = kNoPeer;
  double join_s = 0.0;
  double departure_s = 0.0;
  std::optional<double> download_complete_s;
  double down_bps = 0.0;
  double bytes_downloaded = 0.0;
  double idle_slot_s = 0.0;
  std::optional<double> startup_delay_s;
  std::uint32_t interruptions = 0;
  std::vector<double> stall_waits_s;

  double residence_s() const { return departure_s - join_s; }
  /// From join until the download finished or the peer left.
  double active_download_s() const;
};

/// Per-peer efficiency against a dedicated channel at the peer's own
/// download capacity. Absent for peers that received nothing.
std::optional<double> erc(const PeerLedger& ledger);

/// Ledgers for peers that departed during the run and joined at or after
/// `warmup_s`, ordered by departure.
std::vector<PeerLedger> build_ledgers(const RunTrace& trace, double warmup_s = 0.0);

enum class Metric : std::uint8_t { ERC, PS, EST, SD, NI, TR };
inline constexpr std::array<Metric, 6> kAllMetrics = {Metric::ERC, Metric::PS, Metric::EST,
                                                      Metric::SD,  Metric::NI, Metric::TR};
std::string_view to_string(Metric m);

/// Point estimates for one replication; a metric is absent when it has no
/// sample (for example TR in a run without stalls).
struct RunReport {
  std::array<std::optional<double>, 6> values{};
  std::uint32_t zero_byte_peers = 0;

  std::optional<double> get(Metric m) const { return values[static_cast<std::size_t>(m)]; }
  void set(Metric m, double v) { values[static_cast<std::size_t>(m)] = v; }
};

RunReport finalize_run(const RunTrace& trace, double warmup_s = 0.0);
RunReport finalize_run(std::span<const PeerLedger> ledgers);

inline constexpr double kMaxRelativeHalfwidth = 0.05;

struct Interval {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double halfwidth = 0.0;  // infinite for a single sample
  double ci_low = 0.0;
  double ci_high = 0.0;
  double relative_halfwidth = 0.0;
  bool flagged = false;  // relative half-width above the threshold
};

/// Student-t confidence interval for the mean. Throws std::invalid_argument
/// on an empty sample or a confidence outside (0, 1).
Interval aggregate(std::span<const double> samples, double confidence = 0.95);

struct MetricSummary {
  Metric metric = Metric::ERC;
  std::optional<Interval> interval;  // absent when no run produced a value
};

/// Folds replications into one interval per metric; order-insensitive up to
/// floating-point summation.
std::vector<MetricSummary> aggregate(std::span<const RunReport> reports,
                                     double confidence = 0.95);

}  // namespace vodsim
