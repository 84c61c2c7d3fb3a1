#include "gqmc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "gqmc/covering.hpp"
#include "gqmc/design.hpp"
#include "gqmc/error.hpp"
#include "gqmc/kernels.hpp"
#include "gqmc/random.hpp"
#include "gqmc/summation.hpp"

namespace gqmc {

using nlohmann::json;

void ExperimentConfig::validate() const {
  static const std::set<std::string> commands{"design", "wce", "covering", "report"};
  if (!commands.contains(command)) throw Error(ErrorCode::ConfigError, "unknown command '" + command + "'");
  if (i_min < 1) throw Error(ErrorCode::ConfigError, "--imin must be >= 1");
  if (i_max < i_min) throw Error(ErrorCode::ConfigError, "--imax must be >= --imin");
  if (i_max > 16) throw Error(ErrorCode::ConfigError, "--imax must be <= 16");
  if (trials && *trials < 1) throw Error(ErrorCode::ConfigError, "--trials must be >= 1");
  if (!seed) throw Error(ErrorCode::ConfigError, "--seed is required");
  if (command == "wce") {
    if (kernels.empty()) throw Error(ErrorCode::ConfigError, "--kernels must name at least one kernel");
    for (const auto& k : kernels) {
      if (k != "K1" && k != "K2") throw Error(ErrorCode::ConfigError, "unknown kernel '" + k + "'");
    }
  }
  if (command == "covering" && probes < 1) throw Error(ErrorCode::ConfigError, "--probes must be >= 1");
  if (!(energy_tol >= 0.0)) throw Error(ErrorCode::ConfigError, "--energy-tol must be >= 0");
  if (max_iters < 0) throw Error(ErrorCode::ConfigError, "--max-iters must be >= 0");
  if (restarts && *restarts < 1) throw Error(ErrorCode::ConfigError, "--restarts must be >= 1");
  if (threads < 1) throw Error(ErrorCode::ConfigError, "thread count must be >= 1");
}

int ExperimentConfig::trials_or_default() const {
  if (trials) return *trials;
  return command == "covering" ? 1 : 200;
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw Error(ErrorCode::ConfigError, "--seed is required");
  return *seed;
}

int thread_cap() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GQMC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

std::uint64_t experiment_seed(std::uint64_t seed, SeedTag tag, int i, int trial) {
  return derive_seed(seed, {static_cast<std::uint64_t>(tag), static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(trial)});
}

std::filesystem::path design_csv_path(const std::filesystem::path& out_dir, int i) {
  return out_dir / "designs" / ("design_i" + std::to_string(i) + ".csv");
}

std::filesystem::path design_json_path(const std::filesystem::path& out_dir, int i) {
  return out_dir / "designs" / ("design_i" + std::to_string(i) + ".json");
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << text;
}

DesignResult solve_design(const ExperimentConfig& config, int i, std::ostream& log) {
  CgOptions opt;
  opt.energy_tol = config.energy_tol;
  opt.max_iters = config.max_iters;
  opt.restarts = config.restarts.value_or(default_restarts(i));
  opt.threads = config.threads;
  const DesignProblem problem = DesignProblem::make(i, n_schedule(i), opt);
  const std::uint64_t seed = experiment_seed(config.require_seed(), SeedTag::Design, i);
  DesignResult r = cg_minimize(problem, seed);
  write_projectors_csv(design_csv_path(config.out_dir, i), r.config.points());
  write_text(design_json_path(config.out_dir, i), to_json(r).dump(2) + "\n");
  log << "design i=" << i << " n=" << r.config.size() << " energy=" << format_double(r.energy)
      << " iterations=" << r.iterations << " restart=" << r.restart << (r.converged ? " converged" : " NOT converged")
      << '\n';
  return r;
}

struct LoadedDesign {
  PointConfiguration config;
  json meta;
};

LoadedDesign load_design(const ExperimentConfig& config, int i, std::ostream& log) {
  const auto csv = design_csv_path(config.out_dir, i);
  if (!std::filesystem::exists(csv)) {
    if (!config.generate) {
      throw Error(ErrorCode::MissingDesignFile, csv.string() + " not found (run `gqmc design` or pass --generate)");
    }
    DesignResult r = solve_design(config, i, log);
    return {r.config, to_json(r)};
  }
  LoadedDesign d{PointConfiguration::equal_weights(read_projectors_csv(csv)), json::object()};
  const auto meta = design_json_path(config.out_dir, i);
  if (std::filesystem::exists(meta)) {
    std::ifstream in(meta);
    d.meta = json::parse(in);
  }
  return d;
}

PointConfiguration random_configuration(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  const GrassmannSpace space(2, 4);
  std::vector<Projector> points;
  points.reserve(n);
  for (std::size_t a = 0; a < n; ++a) points.push_back(random_projector(space, rng));
  return PointConfiguration::equal_weights(std::move(points));
}

TraceKernel kernel_by_name(const std::string& name) {
  if (name == "K1") return kernel_k1();
  if (name == "K2") return kernel_k2();
  throw Error(ErrorCode::ConfigError, "unknown kernel '" + name + "'");
}

std::string design_file_ref(int i) { return "designs/design_i" + std::to_string(i) + ".csv"; }

double mean_of(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s += x;
  return s.value() / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  CompensatedSum s;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

int cmd_design(const ExperimentConfig& config, std::ostream& log) {
  std::vector<int> failed;
  for (int i = config.i_min; i <= config.i_max; ++i) {
    if (!solve_design(config, i, log).converged) failed.push_back(i);
  }
  if (failed.empty()) return kExitOk;
  log << "no convergence for i =";
  for (int i : failed) log << ' ' << i;
  log << '\n';
  return kExitNoConvergence;
}

int cmd_wce(const ExperimentConfig& config, std::ostream& log) {
  const std::uint64_t seed = config.require_seed();
  const int trials = config.trials_or_default();
  std::vector<TraceKernel> kernels;
  for (const auto& name : config.kernels) kernels.push_back(kernel_by_name(name));

  std::vector<ExperimentRecord> rows;
  for (int i = config.i_min; i <= config.i_max; ++i) {
    const LoadedDesign design = load_design(config, i, log);
    const std::size_t n = design.config.size();
    const std::uint64_t design_seed = design.meta.value("seed", std::uint64_t{0});
    for (const auto& kernel : kernels) {
      const WceReport rep = wce_squared(design.config, kernel);
      json extra = {{"wce_squared", rep.wce_squared}, {"clamped", rep.clamped}, {"design", design_file_ref(i)}};
      if (design.meta.contains("energy")) extra["energy"] = design.meta["energy"];
      if (design.meta.contains("gaps")) extra["gaps"] = design.meta["gaps"];
      rows.push_back({"wce", "design", i, n, kernel.name(), rep.wce, "wce", design_seed, extra.dump()});
    }

    std::vector<std::vector<double>> wce(kernels.size()), wce2(kernels.size());
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t s = experiment_seed(seed, SeedTag::WceRandom, i, t);
      const PointConfiguration cfg = random_configuration(n, s);
      for (std::size_t q = 0; q < kernels.size(); ++q) {
        const WceReport rep = wce_squared(cfg, kernels[q]);
        wce[q].push_back(rep.wce);
        wce2[q].push_back(rep.wce_squared);
        const json extra = {{"wce_squared", rep.wce_squared}, {"trial", t}, {"matched_i", i}};
        rows.push_back({"wce", "random", 0, n, kernels[q].name(), rep.wce, "wce", s, extra.dump()});
      }
    }
    for (std::size_t q = 0; q < kernels.size(); ++q) {
      const double mean_sq = mean_of(wce2[q]);
      const json extra = {{"trials", trials},
                          {"matched_i", i},
                          {"mean_wce_squared", mean_sq},
                          {"se_wce_squared", standard_error(wce2[q])},
                          {"n_times_mean_wce_squared", static_cast<double>(n) * mean_sq}};
      rows.push_back({"wce", "random_mean", 0, n, kernels[q].name(), mean_of(wce[q]), "wce", seed, extra.dump()});
    }
    for (const auto& kernel : kernels) {
      const json extra = {{"constant", random_wce_constant(kernel)}, {"matched_i", i}};
      rows.push_back({"wce", "theory", 0, n, kernel.name(), expected_random_wce(kernel, n), "wce", seed, extra.dump()});
    }
    log << "wce i=" << i << " n=" << n << " done\n";
  }
  write_records_csv(config.out_dir / "wce.csv", rows);
  return kExitOk;
}

int cmd_covering(const ExperimentConfig& config, std::ostream& log) {
  const std::uint64_t seed = config.require_seed();
  const int trials = config.trials_or_default();
  const GrassmannSpace space(2, 4);

  // Load every design first so missing inputs fail before the expensive part.
  std::vector<LoadedDesign> designs;
  for (int i = config.i_min; i <= config.i_max; ++i) designs.push_back(load_design(config, i, log));

  const std::uint64_t probe_seed = experiment_seed(seed, SeedTag::CoveringProbes);
  const ProbeSet probes = ProbeSet::uniform(space, config.probes, probe_seed, config.threads);
  log << "covering: " << probes.size() << " probes drawn\n";

  std::vector<ExperimentRecord> rows;
  for (int i = config.i_min; i <= config.i_max; ++i) {
    const LoadedDesign& design = designs[i - config.i_min];
    const std::size_t n = design.config.size();
    const CoveringEstimate est = covering_radius_estimate(design.config, probes, config.threads);
    json extra = to_json(est);
    extra["design"] = design_file_ref(i);
    rows.push_back({"covering", "design", i, n, "", est.rho_hat, "rho_hat", design.meta.value("seed", std::uint64_t{0}),
                    extra.dump()});

    std::vector<double> rho;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t s = experiment_seed(seed, SeedTag::CoveringRandom, i, t);
      const CoveringEstimate r = covering_radius_estimate(random_configuration(n, s), probes, config.threads);
      rho.push_back(r.rho_hat);
      json rx = to_json(r);
      rx["trial"] = t;
      rx["matched_i"] = i;
      rows.push_back({"covering", "random", 0, n, "", r.rho_hat, "rho_hat", s, rx.dump()});
    }
    const json mx = {{"trials", trials}, {"matched_i", i}, {"se", standard_error(rho)}, {"probes", probes.size()}};
    rows.push_back({"covering", "random_mean", 0, n, "", mean_of(rho), "rho_hat", seed, mx.dump()});
    const json tx = {{"formula", "2 n^(-1/4) log(n)^(1/4)"}, {"matched_i", i}};
    rows.push_back({"covering", "theory", 0, n, "", expected_random_covering(space, static_cast<double>(n)), "rho_hat",
                    seed, tx.dump()});
    log << "covering i=" << i << " n=" << n << " rho_hat=" << format_double(est.rho_hat) << '\n';
  }
  write_records_csv(config.out_dir / "covering.csv", rows);
  return kExitOk;
}

std::vector<SlopeTarget> default_slope_targets() {
  return {
      {"wce", "design", "K1", -0.975, -0.775},
      {"wce", "random_mean", "K1", -0.55, -0.45},
      {"wce", "random_mean", "K2", -0.55, -0.45},
      {"covering", "design", "", -0.33, -0.17},
  };
}

namespace {

using SeriesKey = std::tuple<std::string, std::string, std::string>;

std::string key_name(const SeriesKey& k) {
  const auto& [e, g, kern] = k;
  return kern.empty() ? e + "/" + g : e + "/" + g + "/" + kern;
}

// Series points used for fitting: designs with i >= 2, everything else at
// n >= n_schedule(2).
std::map<SeriesKey, std::vector<std::pair<double, double>>> collect_series(
    const std::vector<ExperimentRecord>& records) {
  std::map<SeriesKey, std::vector<std::pair<double, double>>> series;
  const auto n_min = static_cast<double>(n_schedule(2));
  for (const auto& r : records) {
    const bool keep = r.generator == "design" ? r.i >= 2 : static_cast<double>(r.n) >= n_min;
    if (keep) series[{r.experiment, r.generator, r.kernel}].emplace_back(static_cast<double>(r.n), r.value);
  }
  for (auto& [k, pts] : series) std::stable_sort(pts.begin(), pts.end());
  return series;
}

}  // namespace

json build_report(const std::vector<ExperimentRecord>& records, const std::vector<SlopeTarget>& targets) {
  const auto series = collect_series(records);
  json out;
  out["series"] = json::array();
  for (const auto& [key, pts] : series) {
    json s = {{"series", key_name(key)}, {"points", pts.size()}};
    try {
      const SlopeFit fit = slope_fit(pts);
      s["slope"] = fit.slope;
      s["intercept"] = fit.intercept;
      s["r2"] = fit.r2;
    } catch (const Error& e) {
      s["error"] = e.what();
    }
    out["series"].push_back(s);
  }

  bool all_pass = true;
  out["checks"] = json::array();
  for (const auto& t : targets) {
    const SeriesKey key{t.experiment, t.generator, t.kernel};
    json c = {{"check", key_name(key) + " slope"}, {"lo", t.lo}, {"hi", t.hi}};
    bool pass = false;
    const auto it = series.find(key);
    if (it == series.end()) {
      c["error"] = "no data";
    } else {
      try {
        const double slope = slope_fit(it->second).slope;
        c["value"] = slope;
        pass = slope >= t.lo && slope <= t.hi;
      } catch (const Error& e) {
        c["error"] = e.what();
      }
    }
    c["pass"] = pass;
    all_pass = all_pass && pass;
    out["checks"].push_back(c);
  }

  // Super-linear log-log decay for the smooth kernel.
  if (const auto it = series.find({"wce", "design", "K2"}); it != series.end()) {
    const auto& pts = it->second;
    json c = {{"check", "wce/design/K2 convexity"}, {"lo", 0.1}};
    bool pass = false;
    if (pts.size() >= 4) {
      const double first = slope_fit(std::span(pts).first(3)).slope;
      const double last = slope_fit(std::span(pts).last(3)).slope;
      c["first_slope"] = first;
      c["last_slope"] = last;
      c["value"] = first - last;
      pass = first - last >= 0.1;
    } else {
      c["error"] = "needs at least 4 design points with i >= 2";
    }
    c["pass"] = pass;
    all_pass = all_pass && pass;
    out["checks"].push_back(c);
  }

  // Random points should cover worse than designs of the same size.
  {
    std::map<std::size_t, double> design_rho, random_rho;
    for (const auto& r : records) {
      if (r.experiment != "covering") continue;
      if (r.generator == "design" && r.i >= 2) design_rho[r.n] = r.value;
      if (r.generator == "random_mean") random_rho[r.n] = r.value;
    }
    int matched = 0, worse = 0;
    for (const auto& [n, rho] : design_rho) {
      if (const auto it = random_rho.find(n); it != random_rho.end()) {
        ++matched;
        if (it->second > rho) ++worse;
      }
    }
    if (matched > 0) {
      const int needed = static_cast<int>(std::ceil(0.8 * matched));
      const bool pass = worse >= needed;
      out["checks"].push_back({{"check", "covering random > design"},
                               {"matched", matched},
                               {"value", worse},
                               {"lo", needed},
                               {"pass", pass}});
      all_pass = all_pass && pass;
    }
  }
  out["all_pass"] = all_pass;
  return out;
}

int cmd_report(const ExperimentConfig& config, std::ostream& log) {
  std::vector<ExperimentRecord> records;
  bool any = false;
  for (const char* name : {"wce.csv", "covering.csv"}) {
    const auto path = config.out_dir / name;
    if (!std::filesystem::exists(path)) continue;
    any = true;
    auto part = read_records_csv(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (!any) throw Error(ErrorCode::MissingDesignFile, "no wce.csv or covering.csv in " + config.out_dir.string());

  const json report = build_report(records, default_slope_targets());
  for (const auto& s : report["series"]) {
    if (!s.contains("slope")) {
      throw Error(ErrorCode::InsufficientData, s["series"].get<std::string>() + ": " + s["error"].get<std::string>());
    }
  }
  write_text(config.out_dir / "report.json", report.dump(2) + "\n");
  for (const auto& c : report["checks"]) {
    log << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["check"].get<std::string>();
    if (c.contains("value")) log << " value=" << c["value"].dump();
    if (c.contains("lo")) log << " lo=" << c["lo"].dump();
    if (c.contains("hi")) log << " hi=" << c["hi"].dump();
    if (c.contains("error")) log << " (" << c["error"].get<std::string>() << ")";
    log << '\n';
  }
  return kExitOk;
}

int run_command(const ExperimentConfig& config, std::ostream& log, std::ostream& err) {
  try {
    config.validate();
    if (config.command == "design") return cmd_design(config, log);
    if (config.command == "wce") return cmd_wce(config, log);
    if (config.command == "covering") return cmd_covering(config, log);
    return cmd_report(config, log);
  } catch (const Error& e) {
    err << "gqmc: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::MissingDesignFile:
      case ErrorCode::InsufficientData:
        return kExitMissingInput;
      case ErrorCode::NoConvergence:
        return kExitNoConvergence;
      default:
        return kExitUsage;
    }
  }
}

}  // namespace gqmc
