#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gqmc/covering.hpp"
#include "gqmc/design.hpp"
#include "gqmc/kernels.hpp"
#include "gqmc/manifold.hpp"

namespace gqmc {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);

// Projector files: a "# grassmann k=<k> m=<m>" header, then one row of m^2
// comma-separated entries (row-major) per projector. Reading re-validates.
void write_projectors(std::ostream& out, std::span<const Projector> points);
std::vector<Projector> read_projectors(std::istream& in);
void write_projectors_csv(const std::filesystem::path& path, std::span<const Projector> points);
std::vector<Projector> read_projectors_csv(const std::filesystem::path& path);

nlohmann::json to_json(const WceReport& r);
nlohmann::json to_json(const CoveringEstimate& e);
/// {i, n, t, energy, gaps[], iterations, converged, seed} plus diagnostics.
nlohmann::json to_json(const DesignResult& r);

struct ExperimentRecord {
  std::string experiment;  // "wce" | "covering"
  std::string generator;   // "design" | "random" | "random_mean" | "theory"
  int i = 0;
  std::size_t n = 0;
  std::string kernel;
  double value = 0.0;
  std::string value_kind;  // "wce" | "rho_hat"
  std::uint64_t seed = 0;
  std::string extra;  // compact JSON object

  bool operator==(const ExperimentRecord&) const = default;
};

inline constexpr const char* kRecordHeader = "experiment,generator,i,n,kernel,value,value_kind,seed,extra";

std::string to_csv_row(const ExperimentRecord& r);
ExperimentRecord parse_csv_row(const std::string& line);

void write_records(std::ostream& out, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_records(std::istream& in);
void write_records_csv(const std::filesystem::path& path, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace gqmc
