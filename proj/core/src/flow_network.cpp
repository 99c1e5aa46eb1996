#include "vodsim/flow_network.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace vodsim {

void allocate_rates_into(std::span<const FlowEdge> edges, std::span<const double> up_bps,
                         std::span<const double> down_bps, std::span<double> rates,
                         std::span<double> scratch_up, std::span<double> scratch_down) {
  // scratch_up counts busy slots per sender, scratch_down sums offered inflow.
  for (const auto& e : edges) scratch_up[e.sender] += 1.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    rates[i] = up_bps[e.sender] / scratch_up[e.sender];
    scratch_down[e.receiver] += rates[i];
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    double offered = scratch_down[e.receiver];
    double cap = down_bps[e.receiver];
    if (offered > cap) rates[i] *= cap / offered;
  }
  for (const auto& e : edges) {
    scratch_up[e.sender] = 0.0;
    scratch_down[e.receiver] = 0.0;
  }
}

std::vector<double> allocate_rates(const FlowGraph& graph) {
  std::vector<double> rates(graph.transfers.size(), 0.0);
  if (graph.transfers.empty()) return rates;
  std::size_t n = std::max(graph.up_bps.size(), graph.down_bps.size());
  for (const auto& e : graph.transfers) {
    if (e.sender >= graph.up_bps.size() || e.receiver >= graph.down_bps.size())
      throw std::out_of_range("flow edge references a peer without caps");
  }
  std::vector<double> su(n, 0.0), sd(n, 0.0);
  allocate_rates_into(graph.transfers, graph.up_bps, graph.down_bps, rates, su, sd);
  return rates;
}

void FlowNetwork::ensure_peer(PeerId peer) {
  if (peer >= up_.size()) {
    std::size_t n = static_cast<std::size_t>(peer) + 1;
    up_.resize(n, 0.0);
    down_.resize(n, 0.0);
    busy_.resize(n, 0);
    busy_seconds_.resize(n, 0.0);
    scratch_up_.resize(n, 0.0);
    scratch_down_.resize(n, 0.0);
  }
}

void FlowNetwork::set_caps(PeerId peer, double up_bps, double down_bps) {
  if (!(up_bps > 0.0) || !(down_bps > 0.0))
    throw std::invalid_argument("peer capacities must be positive");
  ensure_peer(peer);
  up_[peer] = up_bps;
  down_[peer] = down_bps;
  dirty_ = true;
}

TransferId FlowNetwork::start(PeerId sender, PeerId receiver, BlockRef block, double size_bytes,
                              double now_s) {
  if (sender >= up_.size() || receiver >= down_.size() || up_[sender] <= 0.0 ||
      down_[receiver] <= 0.0)
    throw std::logic_error("transfer between peers without capacities");
  if (now_s != clock_) throw std::logic_error("FlowNetwork::start before advance_to(now)");
  Transfer t;
  t.id = next_id_++;
  t.sender = sender;
  t.receiver = receiver;
  t.block = block;
  t.size_bytes = size_bytes;
  t.remaining_bytes = size_bytes;
  t.started_s = now_s;
  index_.emplace(t.id, transfers_.size());
  transfers_.push_back(t);
  edges_.push_back({sender, receiver});
  rates_.push_back(0.0);
  ++busy_[sender];
  dirty_ = true;
  return t.id;
}

void FlowNetwork::remove_at(std::size_t i) {
  --busy_[transfers_[i].sender];
  index_.erase(transfers_[i].id);
  std::size_t last = transfers_.size() - 1;
  if (i != last) {
    transfers_[i] = transfers_[last];
    edges_[i] = edges_[last];
    rates_[i] = rates_[last];
    index_[transfers_[i].id] = i;
  }
  transfers_.pop_back();
  edges_.pop_back();
  rates_.pop_back();
  dirty_ = true;
}

std::optional<Transfer> FlowNetwork::abort(TransferId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  Transfer t = transfers_[it->second];
  remove_at(it->second);
  return t;
}

std::vector<Transfer> FlowNetwork::abort_all(PeerId peer) {
  std::vector<Transfer> out;
  for (std::size_t i = transfers_.size(); i-- > 0;) {
    if (transfers_[i].sender == peer || transfers_[i].receiver == peer) {
      out.push_back(transfers_[i]);
      remove_at(i);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void FlowNetwork::advance_to(double now_s) {
  if (now_s < clock_) throw std::logic_error("FlowNetwork clock moved backwards");
  double dt = now_s - clock_;
  if (dt > 0.0) {
    for (auto& t : transfers_) {
      double bytes = t.rate_bps * dt / 8.0;
      t.remaining_bytes -= bytes;
      t.delivered_bytes += bytes;
      busy_seconds_[t.sender] += dt;
    }
  }
  clock_ = now_s;
}

void FlowNetwork::reallocate() {
  allocate_rates_into(edges_, up_, down_, rates_, scratch_up_, scratch_down_);
  for (std::size_t i = 0; i < transfers_.size(); ++i) transfers_[i].rate_bps = rates_[i];
  dirty_ = false;
}

std::optional<double> FlowNetwork::next_completion_time() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : transfers_) {
    if (t.rate_bps <= 0.0) continue;
    double left = std::max(0.0, t.remaining_bytes);
    best = std::min(best, clock_ + left * 8.0 / t.rate_bps);
  }
  if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
  return best;
}

std::vector<Transfer> FlowNetwork::take_completed(double rel_tol) {
  std::vector<Transfer> done;
  for (std::size_t i = transfers_.size(); i-- > 0;) {
    const auto& t = transfers_[i];
    bool drained = t.remaining_bytes <= rel_tol * t.size_bytes;
    // Residues below clock resolution would otherwise never finish.
    bool imminent = t.rate_bps > 0.0 && t.remaining_bytes * 8.0 / t.rate_bps <= 1e-9;
    if (drained || imminent) {
      done.push_back(t);
      remove_at(i);
    }
  }
  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return done;
}

const Transfer* FlowNetwork::find(TransferId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &transfers_[it->second];
}

std::uint32_t FlowNetwork::busy_slots(PeerId peer) const {
  return peer < busy_.size() ? busy_[peer] : 0;
}

double FlowNetwork::busy_slot_seconds(PeerId peer) const {
  return peer < busy_seconds_.size() ? busy_seconds_[peer] : 0.0;
}

double FlowNetwork::inflow_bps(PeerId peer) const {
  double sum = 0.0;
  for (const auto& t : transfers_)
    if (t.receiver == peer) sum += t.rate_bps;
  return sum;
}

double FlowNetwork::outflow_bps(PeerId peer) const {
  double sum = 0.0;
  for (const auto& t : transfers_)
    if (t.sender == peer) sum += t.rate_bps;
  return sum;
}

}  // namespace vodsim
