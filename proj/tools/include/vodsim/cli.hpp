#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "vodsim/metrics.hpp"
#include "vodsim/model.hpp"
#include "vodsim/trace.hpp"

namespace vodsim::cli {

/// Bad flags, values or config keys.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `--help` was given; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Emit { Summary, PerRun, Trace };

struct Cell {
  Provision provision = Provision::LP;
  Profile profile = Profile::HI;
  PolicyKind policy = PolicyKind::QBPS;

  friend bool operator==(const Cell&, const Cell&) = default;
};

std::string cell_name(const Cell& cell);

struct RunMatrix {
  std::vector<Cell> cells;
  std::uint32_t replications = 30;
  std::uint64_t base_seed = 1;
  std::filesystem::path out_dir = "results";
  Emit emit = Emit::Summary;
  ScenarioConfig base;  // everything not varied by the grid

  /// base_seed + cell_index * replications + rep
  std::uint64_t seed(std::size_t cell_index, std::uint32_t rep) const;
  ScenarioConfig config(std::size_t cell_index, std::uint32_t rep) const;
};

RunMatrix parse_args(const std::vector<std::string>& args);

struct CellResult {
  Cell cell;
  std::vector<RunReport> runs;
  std::vector<std::uint64_t> events;  // per run
  std::vector<MetricSummary> summary;
  bool flagged = false;
};

using TraceSink = std::function<void(std::uint32_t rep, const RunTrace& trace)>;

/// Runs every replication of one cell; `on_trace` sees each raw trace.
CellResult run_cell(const RunMatrix& matrix, std::size_t cell_index, std::ostream& log,
                    const TraceSink& on_trace = {});

void write_summary_csv(std::ostream& out, const CellResult& result);
void write_comparison_csv(std::ostream& out, const std::vector<CellResult>& results);

/// Runs every cell, writes the reports and returns the process exit code:
/// 0 on success, 2 when some metric's interval is wider than the threshold.
int execute(const RunMatrix& matrix, std::ostream& log);

/// Full front end: parse, execute, map errors to exit codes.
int main(int argc, char** argv);

}  // namespace vodsim::cli
