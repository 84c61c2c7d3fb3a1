#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gqmc/error.hpp"
#include "gqmc/kernels.hpp"
#include "gqmc/manifold.hpp"

namespace gqmc {

/// floor((i+1)^2 (2 + 2i + i^2) / 6), the cardinality schedule for G(2,4).
std::size_t n_schedule(int i);

/// Strength i * 2 / sqrt(k) reached by equality in the trace-moment bounds.
double design_strength(int i, int k);

struct CgOptions {
  int max_iters = 20000;
  double energy_tol = 1e-14;
  // Independent random starts; the search stops at the first converged one.
  int restarts = 8;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int threads = 1;
};

/// Default restart count: 8 up to strength index 4, 3 beyond.
int default_restarts(int i);

struct DesignProblem {
  GrassmannSpace space{2, 4};
  int strength_index = 1;
  std::vector<int> powers;
  std::vector<double> targets;
  std::size_t n = 1;
  CgOptions options;

  /// powers 1..i with targets from moment_constant (G(2,4) only).
  static DesignProblem make(int i, std::size_t n, CgOptions options = {});

  /// Any space, with caller-supplied moment targets for powers 1..targets.size().
  static DesignProblem make(GrassmannSpace space, int i, std::size_t n, std::vector<double> targets,
                            CgOptions options = {});

  bool under_provisioned() const { return space == GrassmannSpace(2, 4) && n < n_schedule(strength_index); }
};

struct EnergyEval {
  double energy = 0.0;
  std::vector<double> gaps;  // (1/n^2) sum tr(P_a P_b)^j - c_j, per power
};

EnergyEval energy(const PointConfiguration& config, const DesignProblem& problem);

/// Riemannian gradient of energy(): tangent projection of the Euclidean
/// gradient at each point.
std::vector<TangentVector> energy_gradient(const PointConfiguration& config, const DesignProblem& problem);

struct DesignResult {
  PointConfiguration config;
  double energy = 0.0;
  std::vector<double> gaps;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  int strength_index = 1;
  double strength = 0.0;
  bool under_provisioned = false;
  int restart = 0;
  std::vector<double> energy_history;  // energy after every accepted step, starting value first
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(DesignResult best);
  const DesignResult& best() const { return best_; }

 private:
  DesignResult best_;
};

/// Riemannian Polak-Ribiere+ conjugate gradient from uniformly random
/// starts. Restart r uses seed derive_seed(seed, {r}). Returns the first
/// converged run, or the lowest-energy one when none converge.
DesignResult cg_minimize(const DesignProblem& problem, std::uint64_t seed);

/// One CG run from a given configuration.
DesignResult cg_minimize_from(const DesignProblem& problem, PointConfiguration start, std::uint64_t seed = 0);

/// Throws NoConvergence carrying the result when it did not converge.
const DesignResult& require_converged(const DesignResult& result);

struct DesignVerification {
  bool ok = false;
  std::vector<double> gaps;
  double max_abs_gap = 0.0;
};

/// Recomputes the moment gaps and accepts iff |gap_j| <= tol and
/// gap_j >= -1e-10 for every power.
DesignVerification verify_design(const DesignResult& result, const DesignProblem& problem, double tol);

/// G(2,4) shorthand: targets rebuilt from the result's strength index.
DesignVerification verify_design(const DesignResult& result, double tol);

}  // namespace gqmc
