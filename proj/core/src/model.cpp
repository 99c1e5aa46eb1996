#include "vodsim/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace vodsim {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits "20MiB" into (20, "mib").
std::pair<double, std::string> split_number(std::string_view text) {
  text = trim(text);
  std::size_t i = 0;
  while (i < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' || text[i] == 'e' ||
          text[i] == 'E' || text[i] == '+' || text[i] == '-')) {
    // 'e' only counts as exponent when followed by a digit or sign.
    if ((text[i] == 'e' || text[i] == 'E') &&
        (i + 1 >= text.size() ||
         !(std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '-' ||
           text[i + 1] == '+'))) {
      break;
    }
    ++i;
  }
  if (i == 0) throw ConfigError("expected a number, got '" + std::string(text) + "'");
  double value = 0.0;
  std::istringstream is{std::string(text.substr(0, i))};
  is >> value;
  if (!is || !is.eof()) throw ConfigError("malformed number '" + std::string(text) + "'");
  return {value, lower(trim(text.substr(i)))};
}

double parse_number(std::string_view text) {
  auto [value, unit] = split_number(text);
  if (!unit.empty()) throw ConfigError("unexpected unit in '" + std::string(text) + "'");
  return value;
}

std::uint64_t parse_count(std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'");
  return value;
}

std::uint32_t parse_u32(std::string_view text) {
  auto v = parse_count(text);
  if (v > 0xffffffffull) throw ConfigError("integer out of range: " + std::string(text));
  return static_cast<std::uint32_t>(v);
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "media.content_size", "media.piece_size", "media.block_size", "media.rate",
      "swarm.seeders",      "swarm.leechers",   "swarm.provision",  "workload.profile",
      "policy.kind",        "policy.max_quota", "policy.x",         "policy.k",
      "policy.delta",       "adwis.window",     "adwis.theta",      "run.duration",
      "run.seed",           "run.replications", "run.warmup"};
  return keys;
}

}  // namespace

std::string_view to_string(Provision p) {
  switch (p) {
    case Provision::OP: return "op";
    case Provision::LP: return "lp";
    case Provision::BP: return "bp";
  }
  return "?";
}

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::HI: return "hi";
    case Profile::MI: return "mi";
    case Profile::LI: return "li";
  }
  return "?";
}

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Original: return "original";
    case PolicyKind::SBNP: return "sbnp";
    case PolicyKind::QBPS: return "qbps";
  }
  return "?";
}

std::string_view to_string(CapacityLabel c) {
  switch (c) {
    case CapacityLabel::High: return "high";
    case CapacityLabel::Low: return "low";
    case CapacityLabel::Regular: return "regular";
    case CapacityLabel::Seeder: return "seeder";
  }
  return "?";
}

Provision parse_provision(std::string_view s) {
  auto v = lower(trim(s));
  if (v == "op") return Provision::OP;
  if (v == "lp") return Provision::LP;
  if (v == "bp") return Provision::BP;
  throw ConfigError("unknown provision '" + std::string(s) + "'");
}

Profile parse_profile(std::string_view s) {
  auto v = lower(trim(s));
  if (v == "hi") return Profile::HI;
  if (v == "mi") return Profile::MI;
  if (v == "li") return Profile::LI;
  throw ConfigError("unknown interactive profile '" + std::string(s) + "'");
}

PolicyKind parse_policy_kind(std::string_view s) {
  auto v = lower(trim(s));
  if (v == "original") return PolicyKind::Original;
  if (v == "sbnp") return PolicyKind::SBNP;
  if (v == "qbps") return PolicyKind::QBPS;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

MediaGeometry media_geometry(const MediaFile& media) {
  if (media.content_size_bytes == 0 || media.piece_size_bytes == 0 || media.block_size_bytes == 0)
    throw ConfigError("media sizes must be positive");
  if (media.content_size_bytes % media.piece_size_bytes != 0)
    throw ConfigError("piece size does not divide content size");
  if (media.piece_size_bytes % media.block_size_bytes != 0)
    throw ConfigError("block size does not divide piece size");
  if (!(media.reproduction_rate_bps > 0.0)) throw ConfigError("reproduction rate must be positive");
  auto pieces = media.content_size_bytes / media.piece_size_bytes;
  if (pieces > 0xffffffffull) throw ConfigError("too many pieces");
  MediaGeometry g;
  g.piece_count = static_cast<std::uint32_t>(pieces);
  g.blocks_per_piece = static_cast<std::uint32_t>(media.piece_size_bytes / media.block_size_bytes);
  g.piece_play_duration_s =
      static_cast<double>(media.piece_size_bytes) * 8.0 / media.reproduction_rate_bps;
  return g;
}

std::uint32_t MediaFile::piece_count() const { return media_geometry(*this).piece_count; }
std::uint32_t MediaFile::blocks_per_piece() const { return media_geometry(*this).blocks_per_piece; }
double MediaFile::piece_play_duration_s() const {
  return media_geometry(*this).piece_play_duration_s;
}

CapacityClass capacity_class(CapacityLabel label) {
  switch (label) {
    case CapacityLabel::High: return {label, 480'000.0, 480'000.0};
    case CapacityLabel::Low: return {label, 120'000.0, 120'000.0};
    case CapacityLabel::Regular: return {label, 240'000.0, 240'000.0};
    case CapacityLabel::Seeder: return {label, 240'000.0, 240'000.0};
  }
  throw ConfigError("unknown capacity class");
}

InteractiveProfile interactive_profile(Profile label) {
  InteractiveProfile p;
  p.label = label;
  switch (label) {
    case Profile::HI:
      p.mean_dwell_s = {1.20, 0.0, 1.0, 0.75, 0.75};
      p.play_transition = {0.35, 0.05, 0.20, 0.20, 0.0};
      break;
    case Profile::MI:
      p.mean_dwell_s = {1.70, 0.0, 1.0, 0.75, 0.75};
      p.play_transition = {0.60, 0.04, 0.12, 0.12, 0.0};
      break;
    case Profile::LI:
      p.mean_dwell_s = {2.20, 0.0, 1.0, 0.75, 0.75};
      p.play_transition = {0.85, 0.02, 0.04, 0.04, 0.0};
      break;
  }
  double rest = 0.0;
  for (int i = 0; i < 4; ++i) rest += p.play_transition[i];
  p.play_transition[4] = 1.0 - rest;
  return p;
}

void validate(const InteractiveProfile& profile) {
  double sum = 0.0;
  for (double p : profile.play_transition) {
    if (p < 0.0 || p > 1.0) throw ConfigError("transition probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("transition probabilities do not sum to 1");
  for (double d : profile.mean_dwell_s)
    if (d < 0.0) throw ConfigError("negative mean dwell time");
  if (profile.mean_dwell_s[1] != 0.0) throw ConfigError("Stop must have zero dwell");
}

PolicyParams default_policy_params(PolicyKind kind) {
  PolicyParams p;
  p.kind = kind;
  p.slots = 4;
  p.k = 3;
  p.delta_s = 10.0;
  p.adwis_window = 7;
  p.theta = 3;
  switch (kind) {
    case PolicyKind::Original:
      p.regular_slots = 3;
      p.altruistic_slots = 1;
      p.max_quota = 0;
      break;
    case PolicyKind::SBNP:
      p.regular_slots = 2;
      p.altruistic_slots = 2;
      p.max_quota = 0;
      break;
    case PolicyKind::QBPS:
      p.max_quota = 2;
      p.regular_slots = 4;
      p.altruistic_slots = 2;
      break;
  }
  return p;
}

void validate(const PolicyParams& p) {
  if (p.slots == 0) throw ConfigError("policy.x must be at least 1");
  if (p.kind == PolicyKind::Original && p.slots < 2)
    throw ConfigError("original policy needs at least 2 slots");
  if (!(p.delta_s > 0.0)) throw ConfigError("policy.delta must be positive");
  if (p.k < 1) throw ConfigError("policy.k must be at least 1");
  if (p.adwis_window < 1) throw ConfigError("adwis.window must be at least 1");
  if (p.theta < 1) throw ConfigError("adwis.theta must be at least 1");
  if (p.kind == PolicyKind::QBPS) {
    if (p.max_quota > p.slots) throw ConfigError("policy.max_quota exceeds policy.x");
    if (p.regular_slots != p.slots || p.altruistic_slots != p.max_quota)
      throw ConfigError("inconsistent QBPS slot bounds");
  } else if (p.regular_slots + p.altruistic_slots != p.slots) {
    throw ConfigError("regular + altruistic slots must equal policy.x");
  }
}

std::uint32_t Scenario::count(CapacityLabel label) const {
  return static_cast<std::uint32_t>(std::count_if(
      leecher_classes.begin(), leecher_classes.end(),
      [label](const CapacityClass& c) { return c.label == label; }));
}

double Scenario::mean_leecher_down_bps() const {
  if (leecher_classes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : leecher_classes) sum += c.down_bps;
  return sum / static_cast<double>(leecher_classes.size());
}

double Scenario::provision_target_bps() const {
  switch (provision) {
    case Provision::OP: return 1.25 * media.reproduction_rate_bps;
    case Provision::LP: return 0.8 * media.reproduction_rate_bps;
    case Provision::BP: return media.reproduction_rate_bps;
  }
  return 0.0;
}

Scenario build_scenario(const ScenarioConfig& config) {
  Scenario s;
  s.media = config.media;
  s.geometry = media_geometry(config.media);
  s.n_seeders = config.seeders;
  s.m_leechers = config.leechers;
  s.provision = config.provision;
  s.profile = interactive_profile(config.profile);
  validate(s.profile);

  s.params = default_policy_params(config.policy);
  if (config.slots) s.params.slots = *config.slots;
  if (config.k) s.params.k = *config.k;
  if (config.delta_s) s.params.delta_s = *config.delta_s;
  s.params.adwis_window = config.adwis_window;
  s.params.theta = config.theta;
  switch (config.policy) {
    case PolicyKind::Original:
      if (config.max_quota) throw ConfigError("policy.max_quota only applies to qbps");
      s.params.regular_slots = s.params.slots - 1;
      s.params.altruistic_slots = 1;
      break;
    case PolicyKind::SBNP:
      if (config.max_quota) throw ConfigError("policy.max_quota only applies to qbps");
      s.params.altruistic_slots = s.params.slots / 2;
      s.params.regular_slots = s.params.slots - s.params.altruistic_slots;
      break;
    case PolicyKind::QBPS:
      if (config.max_quota) s.params.max_quota = *config.max_quota;
      s.params.regular_slots = s.params.slots;
      s.params.altruistic_slots = s.params.max_quota;
      break;
  }
  validate(s.params);

  if (!(config.duration_s > 0.0)) throw ConfigError("run.duration must be positive");
  if (config.warmup_s < 0.0 || config.warmup_s >= config.duration_s)
    throw ConfigError("run.warmup must lie in [0, run.duration)");
  s.sim_duration_s = config.duration_s;
  s.warmup_s = config.warmup_s;
  s.rng_seed = config.seed;
  s.seeder_class = capacity_class(CapacityLabel::Seeder);

  const auto m = config.leechers;
  std::uint32_t high = 0;
  switch (config.provision) {
    case Provision::OP: high = (m + 1) / 2; break;
    case Provision::LP: high = static_cast<std::uint32_t>(std::lround(0.2 * m)); break;
    case Provision::BP: high = 0; break;
  }
  s.leecher_classes.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    if (config.provision == Provision::BP)
      s.leecher_classes.push_back(capacity_class(CapacityLabel::Regular));
    else
      s.leecher_classes.push_back(
          capacity_class(i < high ? CapacityLabel::High : CapacityLabel::Low));
  }
  return s;
}

std::uint64_t parse_size_bytes(std::string_view text) {
  auto [value, unit] = split_number(text);
  double mult = 1.0;
  if (unit.empty() || unit == "b") mult = 1.0;
  else if (unit == "kib") mult = 1024.0;
  else if (unit == "mib") mult = 1024.0 * 1024.0;
  else if (unit == "gib") mult = 1024.0 * 1024.0 * 1024.0;
  else throw ConfigError("unknown size unit '" + unit + "'");
  double bytes = value * mult;
  if (bytes < 0.0 || bytes != std::floor(bytes))
    throw ConfigError("size must be a whole number of bytes: " + std::string(text));
  return static_cast<std::uint64_t>(bytes);
}

double parse_rate_bps(std::string_view text) {
  auto [value, unit] = split_number(text);
  double mult = 1.0;
  if (unit.empty() || unit == "bps") mult = 1.0;
  else if (unit == "kbps") mult = 1e3;
  else if (unit == "mbps") mult = 1e6;
  else throw ConfigError("unknown rate unit '" + unit + "'");
  if (!(value > 0.0)) throw ConfigError("rate must be positive");
  return value * mult;
}

ConfigEntries parse_config_entries(std::istream& in) {
  ConfigEntries entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto view = trim(line);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = lower(trim(view.substr(0, eq)));
    auto value = std::string(trim(view.substr(eq + 1)));
    if (!known_keys().contains(key))
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    if (!entries.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return entries;
}

ConfigEntries load_config_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config_entries(in);
}

void apply_config(ScenarioConfig& c, const ConfigEntries& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "media.content_size") c.media.content_size_bytes = parse_size_bytes(value);
    else if (key == "media.piece_size") c.media.piece_size_bytes = parse_size_bytes(value);
    else if (key == "media.block_size") c.media.block_size_bytes = parse_size_bytes(value);
    else if (key == "media.rate") c.media.reproduction_rate_bps = parse_rate_bps(value);
    else if (key == "swarm.seeders") c.seeders = parse_u32(value);
    else if (key == "swarm.leechers") c.leechers = parse_u32(value);
    else if (key == "swarm.provision") c.provision = parse_provision(value);
    else if (key == "workload.profile") c.profile = parse_profile(value);
    else if (key == "policy.kind") c.policy = parse_policy_kind(value);
    else if (key == "policy.max_quota") c.max_quota = parse_u32(value);
    else if (key == "policy.x") c.slots = parse_u32(value);
    else if (key == "policy.k") c.k = parse_u32(value);
    else if (key == "policy.delta") c.delta_s = parse_number(value);
    else if (key == "adwis.window") c.adwis_window = parse_u32(value);
    else if (key == "adwis.theta") c.theta = parse_u32(value);
    else if (key == "run.duration") c.duration_s = parse_number(value);
    else if (key == "run.warmup") c.warmup_s = parse_number(value);
    else if (key == "run.seed") c.seed = parse_count(value);
    else if (key == "run.replications") c.replications = parse_u32(value);
    else throw ConfigError("unknown key '" + key + "'");
  }
  if (c.replications == 0) throw ConfigError("run.replications must be at least 1");
}

}  // namespace vodsim
