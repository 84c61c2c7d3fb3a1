#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gqmc/io.hpp"

namespace gqmc {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitMissingInput = 3;

struct ExperimentConfig {
  std::string command;
  int i_min = 1;
  int i_max = 6;
  std::vector<std::string> kernels{"K1", "K2"};
  std::size_t probes = 1'000'000;
  // Unset means the per-command default: 200 for wce, 1 for covering.
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "gqmc-out";
  double energy_tol = 1e-14;
  int max_iters = 20000;
  // Unset means default_restarts(i).
  std::optional<int> restarts;
  bool generate = false;
  int threads = 1;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  int trials_or_default() const;
  std::uint64_t require_seed() const;
};

/// Threads to use: hardware concurrency, capped by GQMC_THREADS when set.
int thread_cap();

// Derived seeds. Every sub-experiment draws from
//   derive_seed(seed, {tag, i, trial})
// so any single row can be regenerated on its own.
enum class SeedTag : std::uint64_t { Design = 1, WceRandom = 2, CoveringProbes = 3, CoveringRandom = 4 };
std::uint64_t experiment_seed(std::uint64_t seed, SeedTag tag, int i = 0, int trial = 0);

std::filesystem::path design_csv_path(const std::filesystem::path& out_dir, int i);
std::filesystem::path design_json_path(const std::filesystem::path& out_dir, int i);

/// Solves the design problem for each i in range and writes the projector
/// CSV and result JSON. Returns 0 iff every design converged, 2 otherwise.
int cmd_design(const ExperimentConfig& config, std::ostream& log);

/// Writes <out>/wce.csv: design, random, random_mean and theory rows.
int cmd_wce(const ExperimentConfig& config, std::ostream& log);

/// Writes <out>/covering.csv: design, random, random_mean and theory rows.
int cmd_covering(const ExperimentConfig& config, std::ostream& log);

struct SlopeTarget {
  std::string experiment;
  std::string generator;
  std::string kernel;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<SlopeTarget> default_slope_targets();

/// Slope table over the experiment CSVs plus pass/fail per target.
nlohmann::json build_report(const std::vector<ExperimentRecord>& records, const std::vector<SlopeTarget>& targets);

/// Writes <out>/report.json and prints one PASS/FAIL line per target.
int cmd_report(const ExperimentConfig& config, std::ostream& log);

/// Validates and dispatches on config.command, mapping errors to exit codes.
int run_command(const ExperimentConfig& config, std::ostream& log, std::ostream& err);

}  // namespace gqmc
