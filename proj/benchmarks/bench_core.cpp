#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vodsim/flow_network.hpp"
#include "vodsim/model.hpp"
#include "vodsim/piece_policy.hpp"
#include "vodsim/swarm.hpp"

using namespace vodsim;

namespace {

// A full swarm: `peers` peers, every peer uploading on `slots` transfers.
FlowGraph swarm_graph(std::uint32_t peers, std::uint32_t slots) {
  Rng rng(5);
  FlowGraph g;
  g.up_bps.assign(peers, 0.0);
  g.down_bps.assign(peers, 0.0);
  std::uniform_int_distribution<std::uint32_t> cls(0, 1), other(0, peers - 1);
  for (std::uint32_t p = 0; p < peers; ++p) {
    const bool high = cls(rng) == 1;
    g.up_bps[p] = high ? 480'000.0 : 120'000.0;
    g.down_bps[p] = 4.0 * g.up_bps[p];
    for (std::uint32_t s = 0; s < slots; ++s) {
      PeerId r = other(rng);
      if (r == p) r = (r + 1) % peers;
      g.transfers.push_back({p, r});
    }
  }
  return g;
}

void BM_AllocateRates(benchmark::State& state) {
  const auto g = swarm_graph(static_cast<std::uint32_t>(state.range(0)), 4);
  std::vector<double> rates(g.transfers.size());
  std::vector<double> up(g.up_bps.size(), 0.0), down(g.down_bps.size(), 0.0);
  for (auto _ : state) {
    allocate_rates_into(g.transfers, g.up_bps, g.down_bps, rates, up, down);
    benchmark::DoNotOptimize(rates.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.transfers.size()));
}
BENCHMARK(BM_AllocateRates)->Arg(21)->Arg(101)->Arg(1001);

void BM_NextRequest(benchmark::State& state) {
  const std::uint32_t pieces = 80, bpp = 16;
  Rng rng(11);
  Bitfield local(pieces, bpp), remote = Bitfield::full(pieces, bpp);
  std::bernoulli_distribution coin(0.3);
  for (std::uint32_t p = 0; p < pieces; ++p)
    if (coin(rng)) local.add_piece(p);
  const BlockSet inflight(pieces, bpp);
  std::vector<std::uint32_t> avail(pieces);
  std::uniform_int_distribution<std::uint32_t> count(1, 20);
  for (auto& a : avail) a = count(rng);
  auto window = AdwisWindow::make(pieces, 7, 3);
  window.base_piece = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(next_request(local, window, remote, inflight, avail, rng));
}
BENCHMARK(BM_NextRequest)->Arg(0)->Arg(40)->Arg(73);

void BM_Simulate(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.provision = Provision::LP;
  cfg.profile = Profile::HI;
  cfg.policy = static_cast<PolicyKind>(state.range(0));
  cfg.duration_s = 1800.0;
  const auto scenario = build_scenario(cfg);
  std::uint64_t events = 0;
  for (auto _ : state) {
    const auto r = simulate(scenario);
    events += r.events;
    benchmark::DoNotOptimize(r.served);
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
