#include "vodsim/peer_policy.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

namespace vodsim {

// --- RateEstimator ----------------------------------------------------------

void RateEstimator::Window::add(double bytes, double now_s) {
  samples.emplace_back(now_s, bytes);
  while (!samples.empty() && samples.front().first < now_s - kRateHorizonS) samples.pop_front();
}

double RateEstimator::Window::rate(double now_s) const {
  double bytes = 0.0;
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
    if (it->first < now_s - kRateHorizonS) break;
    if (it->first <= now_s) bytes += it->second;
  }
  return bytes * 8.0 / kRateHorizonS;
}

double RateEstimator::rate_of(const std::unordered_map<PeerId, Window>& m, PeerId id,
                              double now_s) {
  auto it = m.find(id);
  return it == m.end() ? 0.0 : it->second.rate(now_s);
}

void RateEstimator::record_received(PeerId from, double bytes, double now_s) {
  received_[from].add(bytes, now_s);
  download_.add(bytes, now_s);
}

void RateEstimator::record_sent(PeerId to, double bytes, double now_s) {
  sent_[to].add(bytes, now_s);
  upload_.add(bytes, now_s);
}

void RateEstimator::forget(PeerId remote) {
  received_.erase(remote);
  sent_.erase(remote);
}

double RateEstimator::received_from_bps(PeerId remote, double now_s) const {
  return rate_of(received_, remote, now_s);
}
double RateEstimator::sent_to_bps(PeerId remote, double now_s) const {
  return rate_of(sent_, remote, now_s);
}
double RateEstimator::download_bps(double now_s) const { return download_.rate(now_s); }
double RateEstimator::upload_bps(double now_s) const { return upload_.rate(now_s); }

// --- SlotAssignment ---------------------------------------------------------

bool SlotAssignment::contains(PeerId id) const {
  return std::find(regular.begin(), regular.end(), id) != regular.end() ||
         std::find(altruistic.begin(), altruistic.end(), id) != altruistic.end();
}

std::vector<PeerId> SlotAssignment::all() const {
  std::vector<PeerId> out(regular);
  out.insert(out.end(), altruistic.begin(), altruistic.end());
  std::sort(out.begin(), out.end());
  return out;
}

ChokeDiff diff_assignments(const SlotAssignment& before, const SlotAssignment& after) {
  auto a = before.all();
  auto b = after.all();
  ChokeDiff d;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(d.choke));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(d.unchoke));
  return d;
}

// --- selection helpers ------------------------------------------------------

namespace {

bool in(const std::vector<PeerId>& v, PeerId id) {
  return std::find(v.begin(), v.end(), id) != v.end();
}

// Highest `key` first; equal keys end up in random order.
template <typename Key>
std::vector<PeerId> top_by(std::span<const RemoteView> pool, std::size_t count,
                           const std::vector<PeerId>& exclude, Key key, Rng& rng) {
  std::vector<const RemoteView*> c;
  for (const auto& r : pool)
    if (!in(exclude, r.id)) c.push_back(&r);
  std::shuffle(c.begin(), c.end(), rng);
  std::stable_sort(c.begin(), c.end(),
                   [&](const RemoteView* a, const RemoteView* b) { return key(*a) > key(*b); });
  std::vector<PeerId> out;
  for (std::size_t i = 0; i < c.size() && out.size() < count; ++i) out.push_back(c[i]->id);
  return out;
}

std::vector<PeerId> random_pick(std::span<const RemoteView> pool, std::size_t count,
                                const std::vector<PeerId>& exclude, Rng& rng) {
  std::vector<PeerId> c;
  for (const auto& r : pool)
    if (!in(exclude, r.id)) c.push_back(r.id);
  if (c.size() <= count) return c;
  std::shuffle(c.begin(), c.end(), rng);
  c.resize(count);
  return c;
}

std::vector<PeerId> still_interested(const std::vector<PeerId>& ids,
                                     std::span<const RemoteView> interested) {
  std::vector<PeerId> out;
  for (PeerId id : ids)
    if (std::any_of(interested.begin(), interested.end(),
                    [id](const RemoteView& r) { return r.id == id; }))
      out.push_back(id);
  return out;
}

// Reciprocation slots plus randomly chosen altruistic slots.
SlotAssignment reciprocate_plus_optimistic(Role role, std::span<const RemoteView> interested,
                                           const SlotAssignment& current, TickKind tick,
                                           std::size_t regular_slots, std::size_t optimistic_slots,
                                           Rng& rng) {
  SlotAssignment next;
  next.role = role;
  std::vector<PeerId> kept;
  if (tick == TickKind::Regular) kept = still_interested(current.altruistic, interested);
  if (kept.size() > optimistic_slots) kept.resize(optimistic_slots);

  auto rate = [role](const RemoteView& r) {
    return role == Role::Leecher ? r.received_from_bps : r.sent_to_bps;
  };
  next.regular = top_by(interested, regular_slots, kept, rate, rng);

  std::vector<PeerId> taken = next.regular;
  taken.insert(taken.end(), kept.begin(), kept.end());
  auto fresh = random_pick(interested, optimistic_slots - kept.size(), taken, rng);
  next.altruistic = kept;
  next.altruistic.insert(next.altruistic.end(), fresh.begin(), fresh.end());
  return next;
}

}  // namespace

SlotAssignment original_unchoke(Role role, std::span<const RemoteView> interested,
                                const SlotAssignment& current, TickKind tick,
                                const PolicyParams& params, Rng& rng) {
  std::size_t optimistic = params.slots > 1 ? 1 : 0;
  return reciprocate_plus_optimistic(role, interested, current, tick, params.slots - optimistic,
                                     optimistic, rng);
}

SlotAssignment sbnp_unchoke(Role role, std::span<const RemoteView> interested,
                            const SlotAssignment& current, TickKind tick,
                            const PolicyParams& params, Rng& rng) {
  if (role == Role::Leecher)
    return reciprocate_plus_optimistic(role, interested, current, tick, params.regular_slots,
                                       params.altruistic_slots, rng);
  SlotAssignment next;
  next.role = role;
  auto recency = [](const RemoteView& r) {
    return r.last_unchoke_s.value_or(-std::numeric_limits<double>::infinity());
  };
  next.regular = top_by(interested, params.slots, {}, recency, rng);
  return next;
}

std::vector<PeerId> qbps_quota_candidates(std::span<const RemoteView> interested,
                                          double local_download_bps,
                                          std::uint32_t local_playback_piece,
                                          std::uint32_t max_quota) {
  std::vector<const RemoteView*> c;
  for (const auto& r : interested)
    if (r.received_from_bps < local_download_bps) c.push_back(&r);
  auto distance = [local_playback_piece](const RemoteView* r) {
    return r->playback_piece > local_playback_piece ? r->playback_piece - local_playback_piece
                                                    : local_playback_piece - r->playback_piece;
  };
  std::sort(c.begin(), c.end(), [&](const RemoteView* a, const RemoteView* b) {
    auto da = distance(a), db = distance(b);
    return da != db ? da < db : a->id < b->id;
  });
  std::vector<PeerId> out;
  for (std::size_t i = 0; i < c.size() && out.size() < max_quota; ++i) out.push_back(c[i]->id);
  return out;
}

SlotAssignment qbps_unchoke(Role role, std::span<const RemoteView> interested,
                            double local_download_bps, std::uint32_t local_playback_piece,
                            const SlotAssignment& current, TickKind tick,
                            const PolicyParams& params, Rng& rng) {
  if (role == Role::Seeder) return original_unchoke(role, interested, current, tick, params, rng);
  SlotAssignment next;
  next.role = role;
  if (tick == TickKind::Optimistic) {
    next.altruistic = qbps_quota_candidates(interested, local_download_bps, local_playback_piece,
                                            params.max_quota);
  } else {
    next.altruistic = still_interested(current.altruistic, interested);
    if (next.altruistic.size() > params.max_quota) next.altruistic.resize(params.max_quota);
  }
  std::size_t regular = params.slots - next.altruistic.size();
  next.regular = top_by(
      interested, regular, next.altruistic,
      [](const RemoteView& r) { return r.received_from_bps; }, rng);
  return next;
}

// --- PeerSelector -----------------------------------------------------------

ChokeDiff PeerSelector::on_tick(Role role, std::span<const RemoteView> interested,
                                double local_download_bps, std::uint32_t local_playback_piece,
                                TickKind tick, double now_s, Rng& rng) {
  ++tick_count_;
  SlotAssignment base = current_;
  // A role change restarts the slot layout.
  if (base.role != role) base = SlotAssignment{{}, {}, role};
  SlotAssignment next;
  switch (params_.kind) {
    case PolicyKind::Original:
      next = original_unchoke(role, interested, base, tick, params_, rng);
      break;
    case PolicyKind::SBNP:
      next = sbnp_unchoke(role, interested, base, tick, params_, rng);
      break;
    case PolicyKind::QBPS:
      next = qbps_unchoke(role, interested, local_download_bps, local_playback_piece, base, tick,
                          params_, rng);
      break;
  }
  ChokeDiff diff = diff_assignments(current_, next);
  for (PeerId id : next.all()) last_unchoke_[id] = now_s;
  current_ = std::move(next);
  return diff;
}

bool PeerSelector::release(PeerId remote) {
  last_unchoke_.erase(remote);
  auto drop = [remote](std::vector<PeerId>& v) {
    auto it = std::find(v.begin(), v.end(), remote);
    if (it == v.end()) return false;
    v.erase(it);
    return true;
  };
  bool a = drop(current_.regular);
  bool b = drop(current_.altruistic);
  return a || b;
}

std::optional<double> PeerSelector::last_unchoke(PeerId remote) const {
  auto it = last_unchoke_.find(remote);
  if (it == last_unchoke_.end()) return std::nullopt;
  return it->second;
}

}  // namespace vodsim
