// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
// Criteria 3-5 run the real experiment pipeline (design, wce, covering) at
// desk scale: i = 1..6, 200 random trials per n, 10^6 covering probes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "gqmc/covering.hpp"
#include "gqmc/design.hpp"
#include "gqmc/experiment.hpp"
#include "gqmc/io.hpp"
#include "gqmc/kernels.hpp"
#include "gqmc/manifold.hpp"

using namespace gqmc;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr int kIMax = 6;
constexpr int kIMaxDegraded = 4;
constexpr double kDegradedWidening = 0.15;
constexpr std::size_t kProbes = 1'000'000;
const GrassmannSpace kG24(2, 4);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

int failures = 0;

void report(int number, const std::string& title, const Outcome& o, double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", seconds);
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << " (" << title << ", " << buf
            << " s): " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) { return format_double(x); }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig pipeline_config(const std::string& command, const fs::path& out) {
  ExperimentConfig c;
  c.command = command;
  c.i_min = 1;
  c.i_max = kIMax;
  c.seed = kSeed;
  c.out_dir = out;
  c.probes = kProbes;
  c.threads = thread_cap();
  return c;
}

int run_pipeline(const fs::path& out, std::ostream& log) {
  fs::remove_all(out);
  int design_status = kExitOk;
  for (const char* cmd : {"design", "wce", "covering"}) {
    ExperimentConfig c = pipeline_config(cmd, out);
    const int status = run_command(c, log, std::cerr);
    if (std::string(cmd) == "design") {
      design_status = status;
    } else if (status != kExitOk) {
      return status;
    }
  }
  return design_status;
}

std::string pipeline_bytes(const fs::path& out) {
  std::string all;
  for (int i = 1; i <= kIMax; ++i) all += slurp(design_csv_path(out, i)) + slurp(design_json_path(out, i));
  return all + slurp(out / "wce.csv") + slurp(out / "covering.csv");
}

Mat random_symmetric(RandomStream& rng) {
  Mat g(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) g(i, j) = g(j, i) = rng.normal();
  }
  return g;
}

std::vector<Projector> random_points(std::size_t n, RandomStream& rng) {
  std::vector<Projector> out;
  for (std::size_t a = 0; a < n; ++a) out.push_back(random_projector(kG24, rng));
  return out;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const double d1 = std::abs(kernel_k1().khat0() - khat0_quadrature(kernel_k1(), 64));
  const double d2 = std::abs(kernel_k2().khat0() - khat0_quadrature(kernel_k2(), 32));
  o.require(d1 <= 1e-8, "K1 closed form vs 64-node quadrature |diff|=" + fmt(d1) + " <= 1e-8");
  o.require(d2 <= 1e-12, "K2 closed form vs 32-node quadrature |diff|=" + fmt(d2) + " <= 1e-12");
  const double s = seconds_since(t0);
  o.require(s < 1.0, "runtime < 1 s");
  report(1, "closed-form constants", o, s);
}

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  constexpr std::size_t kN = 100;
  constexpr int kConfigs = 200;
  for (const TraceKernel& k : {kernel_k1(), kernel_k2()}) {
    RandomStream rng(derive_seed(kSeed, {2, k.name() == "K1" ? 1u : 2u}));
    double sum = 0.0, sum_sq = 0.0;
    for (int c = 0; c < kConfigs; ++c) {
      const double v = kN * wce_squared(PointConfiguration::equal_weights(random_points(kN, rng)), k).wce_squared;
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / kConfigs;
    const double se = std::sqrt((sum_sq / kConfigs - mean * mean) / (kConfigs - 1));
    const double c2 = random_wce_constant(k);
    o.require(std::abs(mean - c2) <= 3 * se, k.name() + " mean(n wce^2)=" + fmt(mean) + " vs c^2=" + fmt(c2) +
                                                 " (|diff|/SE=" + fmt(std::abs(mean - c2) / se) + " <= 3)");
  }
  const double s = seconds_since(t0);
  o.require(s < 60.0, "runtime < 1 min");
  report(2, "random-point wce law at n=100", o, s);
}

struct PipelineState {
  bool ran = false;
  bool degraded = false;
  int i_max = kIMax;
  std::vector<ExperimentRecord> records;
  double seconds = 0.0;
};

PipelineState criterion_3(const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineState state;
  Outcome o;
  std::ostringstream log;
  const int status = run_pipeline(out, log);
  state.seconds = seconds_since(t0);
  if (status != kExitOk && status != kExitNoConvergence) {
    o.require(false, "pipeline exited with status " + std::to_string(status) + ": " + log.str());
    report(3, "design construction", o, state.seconds);
    return state;
  }
  state.ran = true;
  std::vector<int> failed;
  std::string summary;
  for (int i = 1; i <= kIMax; ++i) {
    std::ifstream in(design_json_path(out, i));
    const json meta = json::parse(in);
    const double e = meta["energy"].get<double>();
    const bool ok = meta["converged"].get<bool>() && e <= 1e-14 && meta["n"].get<std::size_t>() == n_schedule(i);
    if (!ok) failed.push_back(i);
    summary += (summary.empty() ? "" : ", ") + std::string("i=") + std::to_string(i) + " n=" +
               std::to_string(meta["n"].get<std::size_t>()) + " E=" + fmt(e);
  }
  const bool low_ok = std::none_of(failed.begin(), failed.end(), [](int i) { return i <= kIMaxDegraded; });
  if (!failed.empty() && low_ok) {
    state.degraded = true;
    state.i_max = kIMaxDegraded;
    std::string list;
    for (int i : failed) list += " " + std::to_string(i);
    std::cerr << "design: no convergence for i =" << list << "; degrading to i <= " << kIMaxDegraded << '\n';
    summary += "; degraded to i<=4 (failed:" + list + ")";
  }
  o.require(failed.empty() || low_ok, "energy <= 1e-14 at n_schedule(i): " + summary);
  report(3, "design construction", o, state.seconds);

  for (const char* name : {"wce.csv", "covering.csv"}) {
    auto part = read_records_csv(out / name);
    state.records.insert(state.records.end(), part.begin(), part.end());
  }
  if (state.degraded) {
    const std::size_t n_cap = n_schedule(kIMaxDegraded);
    std::erase_if(state.records, [&](const ExperimentRecord& r) { return r.n > n_cap; });
  }
  return state;
}

const json* find_check(const json& report, const std::string& name) {
  for (const auto& c : report["checks"]) {
    if (c["check"] == name) return &c;
  }
  return nullptr;
}

void require_check(Outcome& o, const json& report, const std::string& name) {
  const json* c = find_check(report, name);
  if (c == nullptr) {
    o.require(false, name + ": missing");
    return;
  }
  std::string what = name;
  if (c->contains("value")) what += " = " + (*c)["value"].dump();
  if (c->contains("lo") && c->contains("hi")) {
    what += " in [" + (*c)["lo"].dump() + ", " + (*c)["hi"].dump() + "]";
  } else if (c->contains("lo")) {
    what += " >= " + (*c)["lo"].dump();
  }
  if (c->contains("matched")) what += " of " + (*c)["matched"].dump();
  if (c->contains("error")) what += " (" + (*c)["error"].get<std::string>() + ")";
  o.require((*c)["pass"].get<bool>(), what);
}

json pipeline_report(const PipelineState& state) {
  std::vector<SlopeTarget> targets = default_slope_targets();
  if (state.degraded) {
    for (auto& t : targets) {
      if (t.generator != "design") continue;
      const double centre = t.experiment == "wce" ? -0.875 : -0.25;
      t.lo = centre - kDegradedWidening;
      t.hi = centre + kDegradedWidening;
    }
  }
  return build_report(state.records, targets);
}

void criterion_4(const PipelineState& state) {
  Outcome o;
  if (!state.ran) {
    o.require(false, "pipeline did not run");
  } else {
    const json r = pipeline_report(state);
    require_check(o, r, "wce/design/K1 slope");
    require_check(o, r, "wce/random_mean/K1 slope");
    require_check(o, r, "wce/random_mean/K2 slope");
    require_check(o, r, "wce/design/K2 convexity");
  }
  report(4, "integration slopes", o, 0.0);
}

void criterion_5(const PipelineState& state) {
  Outcome o;
  if (!state.ran) {
    o.require(false, "pipeline did not run");
  } else {
    std::size_t probes = 0;
    for (const auto& rec : state.records) {
      if (rec.experiment == "covering" && rec.generator == "design") {
        probes = json::parse(rec.extra)["probes"].get<std::size_t>();
      }
    }
    o.require(probes == kProbes, "probes = " + std::to_string(probes));
    const json r = pipeline_report(state);
    require_check(o, r, "covering/design slope");
    require_check(o, r, "covering random > design");
    const json* c = find_check(r, "covering random > design");
    const int expected_matched = state.degraded ? kIMaxDegraded - 1 : kIMax - 1;
    o.require(c != nullptr && (*c)["matched"].get<int>() == expected_matched,
              "matched cardinalities = " + std::to_string(expected_matched));
  }
  report(5, "covering slopes", o, 0.0);
}

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double vg = grassmann_volume(kG24);
  const double vb = ball_volume(4);
  const double ratio = std::pow(vg / vb, 0.25);
  const double rho = expected_random_covering(kG24, 1e7);
  o.require(std::abs(vg - 8 * pi2) <= 1e-12 * 8 * pi2, "vol(G(2,4)) = " + fmt(vg) + " = 8 pi^2");
  o.require(std::abs(vb - pi2 / 2) <= 1e-12 * pi2 / 2, "vol(B_4) = " + fmt(vb) + " = pi^2/2");
  o.require(std::abs(ratio - 2.0) <= 1e-12, "ratio^(1/4) = " + fmt(ratio));
  o.require(std::abs(rho - 0.0713) <= 0.0002, "expected covering at n=1e7 = " + fmt(rho) + " (0.0713 +- 2e-4)");
  const double s = seconds_since(t0);
  o.require(s < 1.0, "runtime < 1 s");
  report(6, "volume identities", o, s);
}

void criterion_7(const fs::path& out, const fs::path& rerun) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  RandomStream rng(derive_seed(kSeed, {7}));

  {  // metric axioms
    int bad = 0;
    for (int s = 0; s < 1000; ++s) {
      const Projector p = random_projector(kG24, rng);
      const Projector q = random_projector(kG24, rng);
      const Projector r = random_projector(kG24, rng);
      const double pq = geodesic_distance(p, q);
      const bool ok = pq == geodesic_distance(q, p) && geodesic_distance(p, p) <= 1e-9 && pq > 1e-9 &&
                      geodesic_distance(p, r) <= pq + geodesic_distance(q, r) + 1e-9;
      bad += ok ? 0 : 1;
    }
    o.require(bad == 0, "metric axioms on 1000 triples (" + std::to_string(bad) + " violations)");
  }
  {  // orthogonal invariance of distance and design energy
    double worst_d = 0.0, worst_e = 0.0;
    const DesignProblem problem = DesignProblem::make(4, 12);
    for (int s = 0; s < 100; ++s) {
      Mat g(4, 4);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) g(i, j) = rng.normal();
      }
      const Mat u = Eigen::HouseholderQR<Mat>(g).householderQ() * Mat::Identity(4, 4);
      auto pts = random_points(12, rng);
      std::vector<Projector> rot;
      for (const auto& p : pts) rot.push_back(Projector::from_basis(u * p.basis(), kG24));
      worst_d = std::max(worst_d, std::abs(geodesic_distance(pts[0], pts[1]) - geodesic_distance(rot[0], rot[1])));
      worst_e = std::max(worst_e, std::abs(energy(PointConfiguration::equal_weights(pts), problem).energy -
                                           energy(PointConfiguration::equal_weights(rot), problem).energy));
    }
    o.require(worst_d <= 1e-9 && worst_e <= 1e-10,
              "orthogonal invariance (max dist diff " + fmt(worst_d) + ", energy diff " + fmt(worst_e) + ")");
  }
  {  // moment inequality
    double worst = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 1000; ++c) {
      const auto pts = random_points(1 + c % 30, rng);
      const double n = static_cast<double>(pts.size());
      for (int i = 1; i <= 6; ++i) {
        double s = 0.0;
        for (const auto& p : pts) {
          for (const auto& q : pts) s += std::pow(trace_inner(p, q), i);
        }
        worst = std::min(worst, s / (n * n) - moment_constant(i));
      }
    }
    o.require(worst >= -1e-10, "moment inequality on 1000 configs, i<=6 (min gap " + fmt(worst) + ")");
  }
  {  // gradient finite differences
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      const int i = 1 + c % 4;
      const std::size_t n = 4 + static_cast<std::size_t>(c % 3);
      const DesignProblem problem = DesignProblem::make(i, n);
      const auto pts = random_points(n, rng);
      std::vector<TangentVector> dir;
      for (const auto& p : pts) dir.push_back(tangent_project(random_symmetric(rng), p));
      const auto grad = energy_gradient(PointConfiguration::equal_weights(pts), problem);
      double analytic = 0.0;
      std::vector<Projector> plus, minus;
      for (std::size_t a = 0; a < n; ++a) {
        analytic += grad[a].entries().cwiseProduct(dir[a].entries()).sum();
        plus.push_back(retract(pts[a], dir[a], 1e-5));
        minus.push_back(retract(pts[a], dir[a], -1e-5));
      }
      const double numeric = (energy(PointConfiguration::equal_weights(plus), problem).energy -
                              energy(PointConfiguration::equal_weights(minus), problem).energy) /
                             2e-5;
      worst = std::max(worst, std::abs(analytic - numeric) / std::abs(numeric));
    }
    o.require(worst < 1e-5, "gradient finite differences, 20 cases (max rel err " + fmt(worst) + ")");
  }
  {  // wce duplication invariance
    double worst = 0.0;
    for (int c = 0; c < 50; ++c) {
      const auto pts = random_points(20, rng);
      auto doubled = pts;
      doubled.insert(doubled.end(), pts.begin(), pts.end());
      for (const TraceKernel& k : {kernel_k1(), kernel_k2()}) {
        worst = std::max(worst, std::abs(wce_squared(PointConfiguration::equal_weights(pts), k).wce_squared -
                                         wce_squared(PointConfiguration::equal_weights(doubled), k).wce_squared));
      }
    }
    o.require(worst <= 1e-14, "wce duplication invariance (max diff " + fmt(worst) + ")");
  }
  {  // byte-determinism of the full pipeline
    std::ostringstream log;
    const int status = run_pipeline(rerun, log);
    const bool same = (status == kExitOk || status == kExitNoConvergence) && pipeline_bytes(out) == pipeline_bytes(rerun);
    o.require(same, "full pipeline rerun with seed " + std::to_string(kSeed) + " is byte-identical");
  }
  report(7, "property suites", o, seconds_since(t0));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "gqmc_acceptance";
  std::cout << "acceptance: seed " << kSeed << ", i = 1.." << kIMax << ", " << kProbes << " probes, "
            << thread_cap() << " thread(s), work dir " << work.string() << std::endl;
  try {
    criterion_1();
    criterion_2();
    const PipelineState state = criterion_3(work / "run");
    criterion_4(state);
    criterion_5(state);
    criterion_6();
    criterion_7(work / "run", work / "rerun");
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " criteria FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
