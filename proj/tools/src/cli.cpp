#include "vodsim/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vodsim/engine.hpp"
#include "vodsim/swarm.hpp"

namespace vodsim::cli {

namespace {

constexpr std::array<Provision, 3> kProvisions = {Provision::OP, Provision::LP, Provision::BP};
constexpr std::array<Profile, 3> kProfiles = {Profile::HI, Profile::MI, Profile::LI};
constexpr std::array<PolicyKind, 3> kPolicies = {PolicyKind::Original, PolicyKind::SBNP,
                                                 PolicyKind::QBPS};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename T, std::size_t N, typename Parse>
std::vector<T> axis(const std::string& text, const std::array<T, N>& every, Parse parse) {
  if (lower(text) == "all") return {every.begin(), every.end()};
  return {parse(text)};
}

Emit parse_emit(const std::string& text) {
  auto t = lower(text);
  if (t == "summary") return Emit::Summary;
  if (t == "per-run") return Emit::PerRun;
  if (t == "trace") return Emit::Trace;
  throw UsageError("--emit: expected summary, per-run or trace, got '" + text + "'");
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.6f}", v);
}

std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : ""; }

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

nlohmann::json interval_json(const std::optional<Interval>& iv) {
  if (!iv) return nullptr;
  auto finite = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"n", iv->n},
          {"mean", iv->mean},
          {"ci_low", finite(iv->ci_low)},
          {"ci_high", finite(iv->ci_high)},
          {"halfwidth", finite(iv->halfwidth)},
          {"rel_halfwidth", finite(iv->relative_halfwidth)},
          {"flagged", iv->flagged}};
}

}  // namespace

std::string cell_name(const Cell& cell) {
  return lower(to_string(cell.provision)) + "_" + lower(to_string(cell.profile)) + "_" +
         lower(to_string(cell.policy));
}

std::uint64_t RunMatrix::seed(std::size_t cell_index, std::uint32_t rep) const {
  return base_seed + static_cast<std::uint64_t>(cell_index) * replications + rep;
}

ScenarioConfig RunMatrix::config(std::size_t cell_index, std::uint32_t rep) const {
  ScenarioConfig c = base;
  const Cell& cell = cells.at(cell_index);
  c.provision = cell.provision;
  c.profile = cell.profile;
  c.policy = cell.policy;
  c.seed = seed(cell_index, rep);
  c.replications = replications;
  return c;
}

RunMatrix parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Discrete-event simulator of BitTorrent-like video-on-demand swarms", "vodsim"};
  std::string scenario = "all", profile = "all", policy = "all", emit = "summary";
  std::uint32_t reps = 30;
  std::uint64_t seed = 1;
  double duration = 7200.0;
  std::string config_path, out_dir = "results";

  auto* o_scenario = app.add_option("--scenario", scenario, "op | lp | bp | all");
  auto* o_profile = app.add_option("--profile", profile, "hi | mi | li | all");
  auto* o_policy = app.add_option("--policy", policy, "original | sbnp | qbps | all");
  auto* o_reps = app.add_option("--reps", reps, "replications per cell (default 30)");
  auto* o_seed = app.add_option("--seed", seed, "base seed (default 1)");
  auto* o_duration =
      app.add_option("--duration", duration, "simulated seconds per run (default 7200)");
  app.add_option("--config", config_path, "key = value file overriding the defaults");
  app.add_option("--out", out_dir, "output directory (default ./results)");
  app.add_option("--emit", emit, "summary | per-run | trace");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunMatrix m;
  m.out_dir = out_dir;
  m.emit = parse_emit(emit);

  try {
    if (!config_path.empty()) {
      const auto entries = load_config_entries(config_path);
      const std::map<std::string, const CLI::Option*> flag_for = {
          {"swarm.provision", o_scenario}, {"workload.profile", o_profile},
          {"policy.kind", o_policy},       {"run.replications", o_reps},
          {"run.seed", o_seed},            {"run.duration", o_duration}};
      for (const auto& [key, opt] : flag_for)
        if (entries.count(key) && opt->count() > 0)
          throw UsageError("config key '" + key + "' conflicts with " + opt->get_name());
      apply_config(m.base, entries);
      if (entries.count("swarm.provision")) scenario = std::string(to_string(m.base.provision));
      if (entries.count("workload.profile")) profile = std::string(to_string(m.base.profile));
      if (entries.count("policy.kind")) policy = std::string(to_string(m.base.policy));
    }
    if (o_reps->count()) m.base.replications = reps;
    if (o_seed->count()) m.base.seed = seed;
    if (o_duration->count()) m.base.duration_s = duration;

    if (m.base.replications == 0) throw UsageError("--reps must be at least 1");
    if (!(m.base.duration_s > 0.0)) throw UsageError("--duration must be positive");
    m.replications = m.base.replications;
    m.base_seed = m.base.seed;

    for (auto pv : axis(scenario, kProvisions, parse_provision))
      for (auto pf : axis(profile, kProfiles, parse_profile))
        for (auto pk : axis(policy, kPolicies, parse_policy_kind)) m.cells.push_back({pv, pf, pk});

    if (m.base.max_quota &&
        std::any_of(m.cells.begin(), m.cells.end(),
                    [](const Cell& c) { return c.policy != PolicyKind::QBPS; }))
      throw UsageError("policy.max_quota applies only when every cell runs qbps");
    for (std::size_t i = 0; i < m.cells.size(); ++i) build_scenario(m.config(i, 0));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return m;
}

CellResult run_cell(const RunMatrix& matrix, std::size_t cell_index, std::ostream& log,
                    const TraceSink& on_trace) {
  CellResult result;
  result.cell = matrix.cells.at(cell_index);
  for (std::uint32_t rep = 0; rep < matrix.replications; ++rep) {
    const ScenarioConfig config = matrix.config(cell_index, rep);
    const RunResult run = simulate(build_scenario(config));
    RunReport report = finalize_run(run.trace, config.warmup_s);
    if (report.get(Metric::PS).value_or(0.0) == 0.0)
      log << "warning: " << cell_name(result.cell) << " rep " << rep
          << " served no peers; its metrics are absent\n";
    if (on_trace) on_trace(rep, run.trace);
    result.runs.push_back(report);
    result.events.push_back(run.events);
  }
  result.summary = aggregate(result.runs);
  result.flagged = std::any_of(result.summary.begin(), result.summary.end(),
                               [](const MetricSummary& s) { return s.interval && s.interval->flagged; });
  return result;
}

void write_summary_csv(std::ostream& out, const CellResult& result) {
  const auto& c = result.cell;
  out << "scenario,profile,policy,metric,mean,ci_low,ci_high,rel_halfwidth,reps\n";
  for (const auto& s : result.summary) {
    out << to_string(c.provision) << ',' << to_string(c.profile) << ',' << to_string(c.policy)
        << ',' << to_string(s.metric) << ',';
    if (s.interval) {
      const auto& iv = *s.interval;
      out << number(iv.mean) << ',' << number(iv.ci_low) << ',' << number(iv.ci_high) << ','
          << number(iv.relative_halfwidth) << ',' << iv.n << '\n';
    } else {
      out << ",,,,0\n";
    }
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "scenario,profile,metric";
  for (auto p : kPolicies) out << ',' << lower(to_string(p));
  out << '\n';
  std::vector<std::pair<Provision, Profile>> groups;
  for (const auto& r : results) {
    std::pair g{r.cell.provision, r.cell.profile};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  for (const auto& [pv, pf] : groups) {
    for (Metric m : kAllMetrics) {
      out << to_string(pv) << ',' << to_string(pf) << ',' << to_string(m);
      for (auto pk : kPolicies) {
        out << ',';
        for (const auto& r : results) {
          if (!(r.cell == Cell{pv, pf, pk})) continue;
          const auto& iv = r.summary[static_cast<std::size_t>(m)].interval;
          if (iv) out << number(iv->mean);
        }
      }
      out << '\n';
    }
  }
}

int execute(const RunMatrix& matrix, std::ostream& log) {
  ensure_directory(matrix.out_dir);
  std::vector<CellResult> results;
  bool flagged = false;

  for (std::size_t i = 0; i < matrix.cells.size(); ++i) {
    const std::string name = cell_name(matrix.cells[i]);
    log << fmt::format("[{}/{}] {} ({} reps)\n", i + 1, matrix.cells.size(), name,
                       matrix.replications);
    TraceSink sink;
    if (matrix.emit == Emit::Trace) {
      sink = [&](std::uint32_t rep, const RunTrace& trace) {
        auto out = open_output(matrix.out_dir / fmt::format("trace_{}_rep{:03}.txt", name, rep));
        trace.dump(out);
      };
    }
    CellResult r = run_cell(matrix, i, log, sink);
    flagged = flagged || r.flagged;
    {
      auto out = open_output(matrix.out_dir / ("summary_" + name + ".csv"));
      write_summary_csv(out, r);
    }
    if (matrix.emit != Emit::Summary) {
      auto out = open_output(matrix.out_dir / ("runs_" + name + ".csv"));
      out << "scenario,profile,policy,rep,seed,ERC,PS,EST,SD,NI,TR,events\n";
      for (std::uint32_t rep = 0; rep < r.runs.size(); ++rep) {
        out << to_string(r.cell.provision) << ',' << to_string(r.cell.profile) << ','
            << to_string(r.cell.policy) << ',' << rep << ',' << matrix.seed(i, rep);
        for (Metric m : kAllMetrics) out << ',' << optional_number(r.runs[rep].get(m));
        out << ',' << r.events[rep] << '\n';
      }
    }
    results.push_back(std::move(r));
  }

  {
    auto out = open_output(matrix.out_dir / "comparison.csv");
    write_comparison_csv(out, results);
  }

  nlohmann::json report;
  report["replications"] = matrix.replications;
  report["base_seed"] = matrix.base_seed;
  report["duration_s"] = matrix.base.duration_s;
  report["warmup_s"] = matrix.base.warmup_s;
  report["confidence"] = 0.95;
  report["max_rel_halfwidth"] = kMaxRelativeHalfwidth;
  report["cells"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json metrics;
    for (const auto& s : r.summary) metrics[std::string(to_string(s.metric))] = interval_json(s.interval);
    report["cells"].push_back({{"scenario", to_string(r.cell.provision)},
                               {"profile", to_string(r.cell.profile)},
                               {"policy", to_string(r.cell.policy)},
                               {"flagged", r.flagged},
                               {"metrics", metrics}});
  }
  report["flagged"] = flagged;
  {
    auto out = open_output(matrix.out_dir / "report.json");
    out << report.dump(2) << '\n';
  }
  if (flagged) log << "note: some intervals are wider than 5% of their mean\n";
  return flagged ? 2 : 0;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  RunMatrix matrix;
  try {
    matrix = parse_args(args);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "vodsim: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }
  try {
    return execute(matrix, std::cerr);
  } catch (const SimulationError& e) {
    const Event& ev = e.event();
    std::cerr << fmt::format("vodsim: simulation error at t={:.6f} ({} peer {}): {}\n", ev.time_s,
                             to_string(ev.kind), ev.peer, e.what());
  } catch (const std::exception& e) {
    std::cerr << "vodsim: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace vodsim::cli
