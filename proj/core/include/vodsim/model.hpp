#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vodsim {

/// Raised for any malformed or inconsistent scenario input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Provision { OP, LP, BP };
enum class Profile { HI, MI, LI };
enum class PolicyKind { Original, SBNP, QBPS };
enum class CapacityLabel { High, Low, Regular, Seeder };

std::string_view to_string(Provision p);
std::string_view to_string(Profile p);
std::string_view to_string(PolicyKind p);
std::string_view to_string(CapacityLabel c);

// Case-insensitive; throw ConfigError on unknown labels.
Provision parse_provision(std::string_view s);
Profile parse_profile(std::string_view s);
PolicyKind parse_policy_kind(std::string_view s);

struct MediaGeometry {
  std::uint32_t piece_count = 0;
  std::uint32_t blocks_per_piece = 0;
  double piece_play_duration_s = 0.0;
};

/// The single shared content. Sizes are in bytes, the rate in bits per second.
struct MediaFile {
  std::uint64_t content_size_bytes = 20ull << 20;
  std::uint64_t piece_size_bytes = 256ull << 10;
  std::uint64_t block_size_bytes = 16ull << 10;
  double reproduction_rate_bps = 240'000.0;

  std::uint32_t piece_count() const;
  std::uint32_t blocks_per_piece() const;
  double piece_play_duration_s() const;
  double play_duration_s() const { return piece_count() * piece_play_duration_s(); }
};

/// Exact integer geometry; throws ConfigError when sizes do not divide.
MediaGeometry media_geometry(const MediaFile& media);

struct CapacityClass {
  CapacityLabel label = CapacityLabel::Regular;
  double down_bps = 240'000.0;
  double up_bps = 240'000.0;
};

CapacityClass capacity_class(CapacityLabel label);

/// Five-state session model. Index order is Play, Stop, Pause, JB, JF.
struct InteractiveProfile {
  Profile label = Profile::HI;
  std::array<double, 5> mean_dwell_s{};
  std::array<double, 5> play_transition{};
};

/// Defaults for the three workload profiles. The Play->JF probability is the
/// complement of the other four.
InteractiveProfile interactive_profile(Profile label);
void validate(const InteractiveProfile& profile);

struct PolicyParams {
  PolicyKind kind = PolicyKind::QBPS;
  std::uint32_t slots = 4;             // x
  std::uint32_t regular_slots = 2;     // x_1 (upper bound for QBPS)
  std::uint32_t altruistic_slots = 2;  // x_2 (optimistic or quota slots)
  std::uint32_t max_quota = 2;
  std::uint32_t k = 3;
  double delta_s = 10.0;
  std::uint32_t adwis_window = 7;
  std::uint32_t theta = 3;
};

PolicyParams default_policy_params(PolicyKind kind);
void validate(const PolicyParams& params);

/// Everything a run needs, before class instantiation. Defaults are the
/// reference parameterization.
struct ScenarioConfig {
  MediaFile media;
  std::uint32_t seeders = 1;
  std::uint32_t leechers = 20;
  Provision provision = Provision::LP;
  Profile profile = Profile::HI;
  PolicyKind policy = PolicyKind::QBPS;
  // Unset means "use the policy default".
  std::optional<std::uint32_t> max_quota;
  std::optional<std::uint32_t> slots;
  std::optional<std::uint32_t> k;
  std::optional<double> delta_s;
  std::uint32_t adwis_window = 7;
  std::uint32_t theta = 3;
  double duration_s = 7200.0;
  double warmup_s = 0.0;
  std::uint64_t seed = 1;
  std::uint32_t replications = 30;
};

struct Scenario {
  MediaFile media;
  MediaGeometry geometry;
  std::uint32_t n_seeders = 1;
  std::uint32_t m_leechers = 20;
  Provision provision = Provision::LP;
  InteractiveProfile profile;
  PolicyParams params;
  CapacityClass seeder_class;
  // One entry per leecher slot; churn keeps a replacement in its slot.
  std::vector<CapacityClass> leecher_classes;
  double sim_duration_s = 7200.0;
  double warmup_s = 0.0;
  std::uint64_t rng_seed = 1;

  std::uint32_t count(CapacityLabel label) const;
  double mean_leecher_down_bps() const;
  double provision_target_bps() const;
};

Scenario build_scenario(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Key/value configuration files.
//
//   # comment
//   media.content_size = 20MiB
//   swarm.provision    = lp
//
// Sizes accept B/KiB/MiB/GiB suffixes, rates bps/kbps/Mbps (decimal).

using ConfigEntries = std::map<std::string, std::string>;

/// Parses and checks keys; unknown or duplicate keys throw ConfigError.
ConfigEntries parse_config_entries(std::istream& in);
ConfigEntries load_config_entries(const std::string& path);
void apply_config(ScenarioConfig& config, const ConfigEntries& entries);

std::uint64_t parse_size_bytes(std::string_view text);
double parse_rate_bps(std::string_view text);

}  // namespace vodsim
