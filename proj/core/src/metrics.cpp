#include "vodsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace vodsim {

double PeerLedger::active_download_s() const {
  const double end = download_complete_s ? std::min(*download_complete_s, departure_s)
                                         : departure_s;
  return end - join_s;
}

std::optional<double> erc(const PeerLedger& ledger) {
  if (ledger.bytes_downloaded <= 0.0 || ledger.down_bps <= 0.0) return std::nullopt;
  const double active = ledger.active_download_s();
  if (active <= 0.0) return std::nullopt;
  const double dedicated_s = ledger.bytes_downloaded * 8.0 / ledger.down_bps;
  return dedicated_s / active;
}

std::vector<PeerLedger> build_ledgers(const RunTrace& trace, double warmup_s) {
  std::map<PeerId, PeerLedger> open;
  std::vector<PeerLedger> done;
  for (const auto& o : trace.records()) {
    switch (o.kind) {
      case ObservationKind::Join: {
        PeerLedger l;
        l.peer = o.peer;
        l.join_s = o.time_s;
        l.down_bps = o.value;
        open[o.peer] = std::move(l);
        break;
      }
      case ObservationKind::StartupComplete:
        open.at(o.peer).startup_delay_s = o.value;
        break;
      case ObservationKind::Interruption:
        ++open.at(o.peer).interruptions;
        break;
      case ObservationKind::Resume:
        open.at(o.peer).stall_waits_s.push_back(o.value);
        break;
      case ObservationKind::BlockDelivered:
        open.at(o.peer).bytes_downloaded += o.value;
        break;
      case ObservationKind::DownloadComplete:
        open.at(o.peer).download_complete_s = o.time_s;
        break;
      case ObservationKind::SlotIdle:
        open.at(o.peer).idle_slot_s = o.value;
        break;
      case ObservationKind::Departure: {
        auto it = open.find(o.peer);
        if (it == open.end()) break;
        it->second.departure_s = o.time_s;
        if (it->second.join_s >= warmup_s) done.push_back(std::move(it->second));
        open.erase(it);
        break;
      }
      case ObservationKind::Unchoke:
      case ObservationKind::Choke:
      case ObservationKind::Jump:
        break;
    }
  }
  return done;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::ERC: return "ERC";
    case Metric::PS: return "PS";
    case Metric::EST: return "EST";
    case Metric::SD: return "SD";
    case Metric::NI: return "NI";
    case Metric::TR: return "TR";
  }
  return "?";
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

RunReport finalize_run(std::span<const PeerLedger> ledgers) {
  RunReport r;
  r.set(Metric::PS, static_cast<double>(ledgers.size()));
  if (ledgers.empty()) return r;
  std::vector<double> ercs, est, sd, ni, tr;
  for (const auto& l : ledgers) {
    if (auto e = erc(l))
      ercs.push_back(*e);
    else
      ++r.zero_byte_peers;
    est.push_back(l.idle_slot_s);
    if (l.startup_delay_s) sd.push_back(*l.startup_delay_s);
    ni.push_back(static_cast<double>(l.interruptions));
    tr.insert(tr.end(), l.stall_waits_s.begin(), l.stall_waits_s.end());
  }
  auto put = [&](Metric m, const std::vector<double>& v) {
    if (auto x = mean_of(v)) r.set(m, *x);
  };
  put(Metric::ERC, ercs);
  put(Metric::EST, est);
  put(Metric::SD, sd);
  put(Metric::NI, ni);
  put(Metric::TR, tr);
  return r;
}

RunReport finalize_run(const RunTrace& trace, double warmup_s) {
  auto ledgers = build_ledgers(trace, warmup_s);
  return finalize_run(ledgers);
}

Interval aggregate(std::span<const double> samples, double confidence) {
  if (samples.empty()) throw std::invalid_argument("aggregate: empty sample");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("aggregate: confidence must lie in (0, 1)");
  Interval iv;
  iv.n = samples.size();
  double sum = 0.0;
  for (double x : samples) sum += x;
  iv.mean = sum / static_cast<double>(iv.n);
  if (iv.n < 2) {
    iv.halfwidth = std::numeric_limits<double>::infinity();
    iv.ci_low = -iv.halfwidth;
    iv.ci_high = iv.halfwidth;
    iv.relative_halfwidth = iv.halfwidth;
    iv.flagged = true;
    return iv;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - iv.mean) * (x - iv.mean);
  iv.stddev = std::sqrt(ss / static_cast<double>(iv.n - 1));
  boost::math::students_t dist(static_cast<double>(iv.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  iv.halfwidth = t * iv.stddev / std::sqrt(static_cast<double>(iv.n));
  iv.ci_low = iv.mean - iv.halfwidth;
  iv.ci_high = iv.mean + iv.halfwidth;
  if (iv.halfwidth == 0.0)
    iv.relative_halfwidth = 0.0;
  else if (iv.mean == 0.0)
    iv.relative_halfwidth = std::numeric_limits<double>::infinity();
  else
    iv.relative_halfwidth = iv.halfwidth / std::abs(iv.mean);
  iv.flagged = iv.relative_halfwidth > kMaxRelativeHalfwidth;
  return iv;
}

std::vector<MetricSummary> aggregate(std::span<const RunReport> reports, double confidence) {
  std::vector<MetricSummary> out;
  for (Metric m : kAllMetrics) {
    std::vector<double> xs;
    for (const auto& r : reports)
      if (auto v = r.get(m)) xs.push_back(*v);
    MetricSummary s{m, std::nullopt};
    if (!xs.empty()) s.interval = aggregate(xs, confidence);
    out.push_back(s);
  }
  return out;
}

}  // namespace vodsim
