#include "vodsim/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vodsim {

namespace {

constexpr std::size_t kMaxSamples = 20;
constexpr double kCapTol = 1e-6;

std::string describe(double t, PeerId a, PeerId b = kNoPeer) {
  std::ostringstream os;
  os << "t=" << t << " peer=" << a;
  if (b != kNoPeer) os << " remote=" << b;
  return os.str();
}

}  // namespace

std::vector<PeerId> tracker_join(std::span<const PeerId> population, Rng& rng,
                                 std::size_t max_peers) {
  std::vector<PeerId> pool(population.begin(), population.end());
  if (pool.size() > max_peers) {
    // Partial Fisher-Yates: the first max_peers entries are a uniform sample.
    for (std::size_t i = 0; i < max_peers; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
      std::swap(pool[i], pool[d(rng)]);
    }
    pool.resize(max_peers);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::uint64_t InvariantReport::total_violations() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : violations) n += c;
  return n;
}

void InvariantReport::fail(const std::string& kind, const std::string& detail) {
  ++violations[kind];
  if (samples.size() < kMaxSamples) samples.push_back(kind + ": " + detail);
}

Swarm::Swarm(const Scenario& scenario, SimOptions options)
    : scenario_(scenario), options_(options), rng_(scenario.rng_seed) {
  engine_.on(EventKind::Arrival, [this](const Event& ev) { join(ev.peer); });
  engine_.on(EventKind::ReevalTick, [this](const Event& ev) { on_tick(ev); });
  engine_.on(EventKind::OptimisticTick, [this](const Event& ev) { on_tick(ev); });
  engine_.on(EventKind::PlaybackBoundary, [this](const Event& ev) { on_playback(ev); });
  engine_.on(EventKind::InteractiveAction, [this](const Event& ev) { on_playback(ev); });
  engine_.on(EventKind::Departure, [this](const Event& ev) { on_departure(ev); });
  engine_.on_block_complete([this](const Transfer& t) { on_block_received(t); });
  if (options_.check_invariants) {
    engine_.on_reallocated([this] { check_flows(); });
    engine_.on_advance([this](double t) { check_population(t); });
  }

  for (std::uint32_t i = 0; i < scenario_.n_seeders; ++i)
    create_peer(i, scenario_.seeder_class, true);
  for (std::uint32_t i = 0; i < scenario_.m_leechers; ++i)
    create_peer(i, scenario_.leecher_classes[i], false);
  for (const auto& p : peers_) engine_.schedule(0.0, EventKind::Arrival, p.id);
}

PeerId Swarm::create_peer(std::uint32_t slot, const CapacityClass& capacity, bool seeder) {
  const auto& g = scenario_.geometry;
  PeerId id = static_cast<PeerId>(peers_.size());
  Peer& p = peers_.emplace_back(id, scenario_.params);
  p.slot = slot;
  p.capacity = capacity;
  p.initial_seeder = seeder;
  p.role = seeder ? Role::Seeder : Role::Leecher;
  p.have = seeder ? Bitfield::full(g.piece_count, g.blocks_per_piece)
                  : Bitfield(g.piece_count, g.blocks_per_piece);
  p.inflight = BlockSet(g.piece_count, g.blocks_per_piece);
  p.avail.assign(g.piece_count, 0);
  p.window = AdwisWindow::make(g.piece_count, scenario_.params.adwis_window,
                               scenario_.params.theta);
  return id;
}

std::vector<PeerId> Swarm::active_peers() const { return active_; }

void Swarm::join(PeerId id) {
  Peer& p = peers_[id];
  const double now = engine_.now();
  std::vector<PeerId> population = active_;
  p.active = true;
  p.join_s = now;
  active_.insert(std::lower_bound(active_.begin(), active_.end(), id), id);
  engine_.flows().set_caps(id, p.capacity.up_bps, p.capacity.down_bps);
  trace_.append({now, ObservationKind::Join, id, kNoPeer, p.capacity.down_bps});

  for (PeerId q : tracker_join(population, rng_)) {
    if (p.links.size() >= kMaxConnections || peers_[q].links.size() >= kMaxConnections) continue;
    connect(id, q);
  }

  if (!p.initial_seeder) {
    p.session.emplace(scenario_.profile, scenario_.geometry, scenario_.params.theta, now, rng_);
    reschedule_playback(id);
  }
  p.tick_event = engine_.schedule(now, EventKind::OptimisticTick, id);
}

void Swarm::connect(PeerId a, PeerId b) {
  Peer& A = peers_[a];
  Peer& B = peers_[b];
  Link& ab = A.links[b];
  Link& ba = B.links[a];
  const auto n = scenario_.geometry.piece_count;
  for (std::uint32_t piece = 0; piece < n; ++piece) {
    bool a_has = A.have.has_piece(piece), b_has = B.have.has_piece(piece);
    if (b_has) ++A.avail[piece];
    if (a_has) ++B.avail[piece];
    if (b_has && !a_has) ++ab.wanted;
    if (a_has && !b_has) ++ba.wanted;
  }
  // Handshake carries the current playback point.
  ab.remote_playback = B.session ? B.session->state().playback_piece : 0;
  ba.remote_playback = A.session ? A.session->state().playback_piece : 0;
  set_interest(a, b);
  set_interest(b, a);
}

void Swarm::set_interest(PeerId a, PeerId b) {
  Peer& A = peers_[a];
  Link& ab = A.links.at(b);
  bool want = ab.wanted > 0;
  if (ab.am_interested == want) return;
  ab.am_interested = want;
  peers_[b].links.at(a).peer_interested = want;
  if (want) try_request(a, b);
}

void Swarm::try_request(PeerId r, PeerId s) {
  Peer& R = peers_[r];
  auto it = R.links.find(s);
  if (!R.active || it == R.links.end()) return;
  Link& L = it->second;
  if (!L.peer_unchoking || !L.am_interested || L.download) return;
  const Peer& S = peers_[s];
  auto block = next_request(R.have, R.window, S.have, R.inflight, R.avail, rng_);
  if (!block) return;
  if (options_.check_invariants) {
    ++inv_.checks;
    if (!S.links.at(r).am_unchoking)
      inv_.fail("request_across_choke", describe(engine_.now(), r, s));
    if (R.have.has_block(*block) || R.inflight.contains(*block))
      inv_.fail("duplicate_request", describe(engine_.now(), r, s));
  }
  L.download = engine_.flows().start(s, r, *block,
                                     static_cast<double>(scenario_.media.block_size_bytes),
                                     engine_.now());
  R.inflight.insert(*block);
}

void Swarm::try_requests(PeerId r) {
  Peer& R = peers_[r];
  if (!R.active) return;
  for (auto& [s, L] : R.links)
    if (L.peer_unchoking && !L.download) try_request(r, s);
}

void Swarm::cancel_download(PeerId r, PeerId s) {
  Peer& R = peers_[r];
  auto it = R.links.find(s);
  if (it == R.links.end() || !it->second.download) return;
  if (auto t = engine_.flows().abort(*it->second.download)) R.inflight.erase(t->block);
  it->second.download.reset();
}

void Swarm::choke(PeerId a, PeerId c) {
  Peer& A = peers_[a];
  Peer& C = peers_[c];
  A.links.at(c).am_unchoking = false;
  C.links.at(a).peer_unchoking = false;
  if (options_.record_choking) trace_.append({engine_.now(), ObservationKind::Choke, a, c, 0.0});
  if (C.links.at(a).download) {
    cancel_download(c, a);
    try_requests(c);
  }
}

void Swarm::unchoke(PeerId a, PeerId c) {
  peers_[a].links.at(c).am_unchoking = true;
  peers_[c].links.at(a).peer_unchoking = true;
  if (options_.record_choking) trace_.append({engine_.now(), ObservationKind::Unchoke, a, c, 0.0});
  try_request(c, a);
}

void Swarm::on_tick(const Event& ev) {
  Peer& A = peers_[ev.peer];
  if (!A.active) return;
  const double now = engine_.now();
  A.tick_event.reset();

  std::vector<RemoteView> views;
  views.reserve(A.links.size());
  for (const auto& [c, L] : A.links) {
    if (!L.peer_interested) continue;
    views.push_back({c, A.rates.received_from_bps(c, now), A.rates.sent_to_bps(c, now),
                     A.selector.last_unchoke(c), L.remote_playback});
  }
  const double local_dl = A.rates.download_bps(now);
  const std::uint32_t local_pp = A.session ? A.session->state().playback_piece : 0;
  const TickKind kind =
      ev.kind == EventKind::OptimisticTick ? TickKind::Optimistic : TickKind::Regular;

  ChokeDiff diff = A.selector.on_tick(A.role, views, local_dl, local_pp, kind, now, rng_);
  for (PeerId c : diff.choke) choke(A.id, c);
  for (PeerId c : diff.unchoke) unchoke(A.id, c);
  if (options_.check_invariants) check_tick(A, views, local_dl, kind);

  const EventKind next = A.selector.next_tick_kind() == TickKind::Optimistic
                             ? EventKind::OptimisticTick
                             : EventKind::ReevalTick;
  A.tick_event = engine_.schedule(now + scenario_.params.delta_s, next, A.id);
}

void Swarm::on_block_received(const Transfer& t) {
  const double now = engine_.now();
  Peer& R = peers_[t.receiver];
  Peer& S = peers_[t.sender];
  R.inflight.erase(t.block);
  R.links.at(t.sender).download.reset();
  if (options_.check_invariants) {
    ++inv_.checks;
    if (std::abs(t.delivered_bytes - t.size_bytes) > 1e-6 * t.size_bytes)
      inv_.fail("block_conservation", describe(now, t.receiver, t.sender) +
                                          " delivered=" + std::to_string(t.delivered_bytes));
  }
  R.rates.record_received(t.sender, t.size_bytes, now);
  S.rates.record_sent(t.receiver, t.size_bytes, now);
  trace_.append({now, ObservationKind::BlockDelivered, t.receiver, t.sender, t.size_bytes});
  if (R.have.add_block(t.block)) on_piece_completed(t.receiver, t.block.piece);
  try_request(t.receiver, t.sender);
}

void Swarm::on_piece_completed(PeerId a, std::uint32_t piece) {
  Peer& A = peers_[a];
  // Have(piece) to every connection.
  for (auto& [c, L] : A.links) {
    Peer& C = peers_[c];
    ++C.avail[piece];
    if (!C.have.has_piece(piece)) {
      ++C.links.at(a).wanted;
      set_interest(c, a);
      try_request(c, a);
    } else if (L.wanted > 0) {
      --L.wanted;
      set_interest(a, c);
    }
  }
  const std::uint32_t pp = A.session ? A.session->state().playback_piece : 0;
  A.window = update_window(A.window, A.have, WindowEvent::PieceCompleted, pp);
  if (A.have.complete() && A.role == Role::Leecher) {
    A.role = Role::Seeder;
    trace_.append({engine_.now(), ObservationKind::DownloadComplete, a, kNoPeer, 0.0});
  }
  sync_playback(a);
}

void Swarm::sync_playback(PeerId id) {
  Peer& P = peers_[id];
  if (!P.session || P.session->ended() || !P.active) return;
  auto obs = P.session->advance_to(engine_.now(), P.have, rng_);
  apply_playback(id, obs);
  reschedule_playback(id);
}

void Swarm::apply_playback(PeerId id, const std::vector<PlaybackObservation>& obs) {
  Peer& P = peers_[id];
  const double now = engine_.now();
  for (const auto& o : obs) {
    const std::uint32_t pp = P.session->state().playback_piece;
    switch (o.signal) {
      case PlaybackSignal::StartupComplete:
        trace_.append({now, ObservationKind::StartupComplete, id, kNoPeer, o.value});
        break;
      case PlaybackSignal::Interruption:
        trace_.append({now, ObservationKind::Interruption, id, kNoPeer, 0.0});
        P.window = update_window(P.window, P.have, WindowEvent::Stall, pp);
        break;
      case PlaybackSignal::Resume:
        trace_.append({now, ObservationKind::Resume, id, kNoPeer, o.value});
        break;
      case PlaybackSignal::PieceEntered:
        P.window = update_window(P.window, P.have, WindowEvent::PlaybackAdvanced, pp);
        announce_playback(id);
        break;
      case PlaybackSignal::Jump:
        if (options_.record_choking)
          trace_.append({now, ObservationKind::Jump, id, o.piece, 0.0});
        P.window = update_window(P.window, P.have, WindowEvent::Jump, pp);
        announce_playback(id);
        break;
      case PlaybackSignal::Ended:
        engine_.schedule(now, EventKind::Departure, id);
        break;
    }
  }
}

void Swarm::announce_playback(PeerId id) {
  Peer& P = peers_[id];
  const std::uint32_t pp = P.session->state().playback_piece;
  if (pp == P.announced_piece) return;
  P.announced_piece = pp;
  for (const auto& [c, _] : P.links) peers_[c].links.at(id).remote_playback = pp;
}

void Swarm::reschedule_playback(PeerId id) {
  Peer& P = peers_[id];
  if (P.playback_event) engine_.cancel(*P.playback_event);
  P.playback_event.reset();
  if (!P.session || P.session->ended()) return;
  double dt = P.session->time_to_next();
  if (!std::isfinite(dt)) return;
  const auto kind = P.session->phase() == PlaybackSession::Phase::Dwelling
                        ? EventKind::InteractiveAction
                        : EventKind::PlaybackBoundary;
  P.playback_event = engine_.schedule(engine_.now() + dt, kind, id);
}

void Swarm::on_playback(const Event& ev) {
  Peer& P = peers_[ev.peer];
  if (P.playback_event && *P.playback_event == ev.seq) P.playback_event.reset();
  sync_playback(ev.peer);
}

void Swarm::disconnect(PeerId a, PeerId c) {
  Peer& A = peers_[a];
  Peer& C = peers_[c];
  const auto n = scenario_.geometry.piece_count;
  for (std::uint32_t piece = 0; piece < n; ++piece)
    if (A.have.has_piece(piece)) --C.avail[piece];
  C.links.erase(a);
  C.selector.release(a);
  C.rates.forget(a);
}

void Swarm::on_departure(const Event& ev) {
  const PeerId a = ev.peer;
  Peer& A = peers_[a];
  if (!A.active) return;
  const double now = engine_.now();

  const double residence = now - A.join_s;
  const double busy = engine_.flows().busy_slot_seconds(a);
  const double idle = std::max(0.0, residence - busy / scenario_.params.slots);
  trace_.append({now, ObservationKind::SlotIdle, a, kNoPeer, idle});
  trace_.append({now, ObservationKind::Departure, a, kNoPeer, 0.0});
  ++served_;
  if (options_.check_invariants && A.session) {
    ++inv_.checks;
    if (A.session->interruptions() != A.session->resumes())
      inv_.fail("ni_tr_count", describe(now, a));
  }

  std::vector<PeerId> starved;
  for (const auto& t : engine_.flows().abort_all(a)) {
    if (t.sender == a) {
      Peer& R = peers_[t.receiver];
      R.inflight.erase(t.block);
      R.links.at(a).download.reset();
      starved.push_back(t.receiver);
    }
  }
  for (const auto& [c, _] : A.links) disconnect(a, c);
  A.links.clear();
  if (A.tick_event) engine_.cancel(*A.tick_event);
  if (A.playback_event) engine_.cancel(*A.playback_event);
  A.tick_event.reset();
  A.playback_event.reset();
  A.active = false;
  active_.erase(std::lower_bound(active_.begin(), active_.end(), a));

  if (!A.initial_seeder) churn_replace(a);

  std::sort(starved.begin(), starved.end());
  starved.erase(std::unique(starved.begin(), starved.end()), starved.end());
  for (PeerId r : starved) try_requests(r);
}

PeerId Swarm::churn_replace(PeerId departed) {
  const std::uint32_t slot = peers_[departed].slot;
  PeerId id = create_peer(slot, scenario_.leecher_classes[slot], false);
  ++replacements_;
  join(id);
  return id;
}

void Swarm::check_population(double now) {
  // All initial arrivals happen at t = 0; afterwards churn keeps the size fixed.
  if (now <= 0.0) return;
  ++inv_.checks;
  if (active_.size() != scenario_.n_seeders + scenario_.m_leechers)
    inv_.fail("population", "t=" + std::to_string(now) +
                                " active=" + std::to_string(active_.size()));
}

void Swarm::check_flows() {
  const auto& flows = engine_.flows();
  std::map<PeerId, std::pair<double, double>> load;  // (in, out)
  for (const auto& t : flows.transfers()) {
    ++inv_.checks;
    load[t.receiver].first += t.rate_bps;
    load[t.sender].second += t.rate_bps;
    if (t.rate_bps < 0.0) inv_.fail("negative_rate", describe(engine_.now(), t.sender));
    const auto& S = peers_[t.sender];
    auto it = S.links.find(t.receiver);
    if (it == S.links.end() || !it->second.am_unchoking)
      inv_.fail("request_across_choke", describe(engine_.now(), t.receiver, t.sender));
  }
  for (const auto& [id, io] : load) {
    if (io.first > flows.down_cap(id) * (1.0 + kCapTol))
      inv_.fail("down_cap", describe(engine_.now(), id) + " in=" + std::to_string(io.first));
    if (io.second > flows.up_cap(id) * (1.0 + kCapTol))
      inv_.fail("up_cap", describe(engine_.now(), id) + " out=" + std::to_string(io.second));
  }
}

void Swarm::check_tick(const Peer& A, std::span<const RemoteView> views, double local_dl,
                       TickKind tick) {
  const double now = engine_.now();
  const auto& params = scenario_.params;
  const auto& slots = A.selector.slots();
  ++inv_.checks;

  std::size_t unchoked = 0;
  for (const auto& [c, L] : A.links) {
    if (L.am_unchoking) ++unchoked;
    const bool want = is_interesting(A.have, peers_[c].have);
    if (L.am_interested != want) inv_.fail("interest_consistency", describe(now, A.id, c));
  }
  if (unchoked > params.slots || slots.size() > params.slots)
    inv_.fail("slot_cap", describe(now, A.id) + " unchoked=" + std::to_string(unchoked));

  auto is_interested = [&](PeerId id) {
    return std::any_of(views.begin(), views.end(), [id](const RemoteView& r) { return r.id == id; });
  };
  for (PeerId id : slots.all())
    if (!is_interested(id)) inv_.fail("unchoked_uninterested", describe(now, A.id, id));

  // Neighborhood availability must match a recount.
  for (std::uint32_t p = 0; p < scenario_.geometry.piece_count; ++p) {
    std::uint32_t n = 0;
    for (const auto& [c, _] : A.links)
      if (peers_[c].have.has_piece(p)) ++n;
    if (n != A.avail[p]) {
      inv_.fail("availability", describe(now, A.id));
      break;
    }
  }

  if (params.kind != PolicyKind::QBPS || A.role != Role::Leecher) return;
  if (slots.altruistic.size() > params.max_quota)
    inv_.fail("quota_cap", describe(now, A.id));
  if (slots.regular.size() + slots.altruistic.size() > params.slots)
    inv_.fail("quota_split", describe(now, A.id));
  if (tick != TickKind::Optimistic) return;

  // Independent recheck of eligibility and playback-distance ordering.
  const std::int64_t own = A.session ? A.session->state().playback_piece : 0;
  std::size_t eligible = 0;
  for (const auto& r : views)
    if (r.received_from_bps < local_dl) ++eligible;
  if (slots.altruistic.size() != std::min<std::size_t>(eligible, params.max_quota))
    inv_.fail("quota_fill", describe(now, A.id));
  for (PeerId q : slots.altruistic) {
    const RemoteView* chosen = nullptr;
    for (const auto& r : views)
      if (r.id == q) chosen = &r;
    if (!chosen || !(chosen->received_from_bps < local_dl)) {
      inv_.fail("quota_eligibility", describe(now, A.id, q));
      continue;
    }
    const std::int64_t dq = std::llabs(static_cast<std::int64_t>(chosen->playback_piece) - own);
    for (const auto& r : views) {
      if (!(r.received_from_bps < local_dl)) continue;
      if (std::find(slots.altruistic.begin(), slots.altruistic.end(), r.id) !=
          slots.altruistic.end())
        continue;
      const std::int64_t dr = std::llabs(static_cast<std::int64_t>(r.playback_piece) - own);
      if (dr < dq || (dr == dq && r.id < q))
        inv_.fail("quota_order", describe(now, A.id, r.id));
    }
  }
}

RunResult Swarm::run() {
  if (ran_) throw std::logic_error("Swarm::run called twice");
  ran_ = true;
  engine_.run(scenario_.sim_duration_s);
  RunResult r;
  r.trace = std::move(trace_);
  r.invariants = std::move(inv_);
  r.events = engine_.events_processed();
  r.served = served_;
  r.replacements = replacements_;
  return r;
}

RunResult simulate(const Scenario& scenario, SimOptions options) {
  Swarm swarm(scenario, options);
  return swarm.run();
}

}  // namespace vodsim
