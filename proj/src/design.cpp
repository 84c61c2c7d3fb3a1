#include "gqmc/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "gqmc/random.hpp"
#include "gqmc/summation.hpp"

namespace gqmc {

std::size_t n_schedule(int i) {
  if (i < 1) throw Error(ErrorCode::DomainError, "n_schedule: i >= 1");
  const auto j = static_cast<std::size_t>(i);
  return (j + 1) * (j + 1) * (2 + 2 * j + j * j) / 6;
}

double design_strength(int i, int k) {
  if (i < 1 || k < 1) throw Error(ErrorCode::DomainError, "design_strength: i, k >= 1");
  return i * 2.0 / std::sqrt(static_cast<double>(k));
}

int default_restarts(int i) { return i <= 4 ? 8 : 3; }

DesignProblem DesignProblem::make(int i, std::size_t n, CgOptions options) {
  std::vector<double> targets;
  for (int j = 1; j <= i; ++j) targets.push_back(moment_constant(j));
  return make(GrassmannSpace(2, 4), i, n, std::move(targets), options);
}

DesignProblem DesignProblem::make(GrassmannSpace space, int i, std::size_t n, std::vector<double> targets,
                                  CgOptions options) {
  if (i < 1) throw Error(ErrorCode::DomainError, "strength index must be >= 1");
  if (n < 1) throw Error(ErrorCode::DomainError, "cardinality must be >= 1");
  if (targets.size() != static_cast<std::size_t>(i)) {
    throw Error(ErrorCode::DomainError, "one moment target per power 1..i required");
  }
  DesignProblem p;
  p.space = space;
  p.strength_index = i;
  for (int j = 1; j <= i; ++j) p.powers.push_back(j);
  p.targets = std::move(targets);
  p.n = n;
  p.options = options;
  return p;
}

namespace {

// Flat copies of the projector entries; the hot loops below work on these.
struct FlatPoints {
  int m = 0;
  std::size_t n = 0;
  std::size_t stride = 0;
  std::vector<double> data;

  FlatPoints(const std::vector<Projector>& points, int dim)
      : m(dim), n(points.size()), stride(static_cast<std::size_t>(dim) * dim), data(points.size() * stride) {
    for (std::size_t a = 0; a < n; ++a) {
      const Mat& p = points[a].matrix();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) data[a * stride + i * m + j] = p(i, j);
      }
    }
  }

  const double* operator[](std::size_t a) const { return &data[a * stride]; }

  double trace(std::size_t a, std::size_t b) const {
    const double* pa = (*this)[a];
    const double* pb = (*this)[b];
    double t = 0.0;
    for (std::size_t e = 0; e < stride; ++e) t += pa[e] * pb[e];
    return t;
  }
};

EnergyEval evaluate_energy(const FlatPoints& pts, const DesignProblem& problem) {
  const std::size_t np = problem.powers.size();
  EnergyEval out;
  out.gaps.assign(np, 0.0);
  if (np == 0) return out;
  const int max_power = *std::max_element(problem.powers.begin(), problem.powers.end());

  std::vector<CompensatedSum> totals(max_power);
  std::vector<CompensatedSum> row(max_power);
  for (std::size_t a = 0; a < pts.n; ++a) {
    std::fill(row.begin(), row.end(), CompensatedSum());
    for (std::size_t b = a + 1; b < pts.n; ++b) {
      const double t = pts.trace(a, b);
      double tp = 1.0;
      for (int j = 0; j < max_power; ++j) {
        tp *= t;
        row[j] += tp;
      }
    }
    const double tdiag = pts.trace(a, a);
    double tp = 1.0;
    for (int j = 0; j < max_power; ++j) {
      tp *= tdiag;
      totals[j] += 2.0 * row[j].value();
      totals[j] += tp;
    }
  }
  const double inv_n2 = 1.0 / (static_cast<double>(pts.n) * static_cast<double>(pts.n));
  CompensatedSum e;
  for (std::size_t q = 0; q < np; ++q) {
    const double gap = totals[problem.powers[q] - 1].value() * inv_n2 - problem.targets[q];
    out.gaps[q] = gap;
    e += gap * gap;
  }
  out.energy = e.value();
  return out;
}

// Euclidean partial derivatives: G_a = sum_b w(t_ab) P_b with
// w(t) = sum_j 2 gap_j (2/n^2) j t^{j-1}.
std::vector<Mat> euclidean_gradient(const FlatPoints& pts, const DesignProblem& problem,
                                    const std::vector<double>& gaps) {
  const std::size_t np = problem.powers.size();
  const double inv_n2 = 1.0 / (static_cast<double>(pts.n) * static_cast<double>(pts.n));
  std::vector<double> coef(np);
  for (std::size_t q = 0; q < np; ++q) coef[q] = 4.0 * gaps[q] * inv_n2 * problem.powers[q];

  auto weight = [&](double t) {
    double w = 0.0;
    for (std::size_t q = 0; q < np; ++q) w += coef[q] * std::pow(t, problem.powers[q] - 1);
    return w;
  };

  std::vector<double> acc(pts.n * pts.stride, 0.0);
  for (std::size_t a = 0; a < pts.n; ++a) {
    double* ga = &acc[a * pts.stride];
    const double* pa = pts[a];
    const double waa = weight(pts.trace(a, a));
    for (std::size_t e = 0; e < pts.stride; ++e) ga[e] += waa * pa[e];
    for (std::size_t b = a + 1; b < pts.n; ++b) {
      const double w = weight(pts.trace(a, b));
      double* gb = &acc[b * pts.stride];
      const double* pb = pts[b];
      for (std::size_t e = 0; e < pts.stride; ++e) {
        ga[e] += w * pb[e];
        gb[e] += w * pa[e];
      }
    }
  }

  std::vector<Mat> out(pts.n, Mat(pts.m, pts.m));
  for (std::size_t a = 0; a < pts.n; ++a) {
    for (int i = 0; i < pts.m; ++i) {
      for (int j = 0; j < pts.m; ++j) out[a](i, j) = acc[a * pts.stride + i * pts.m + j];
    }
  }
  return out;
}

std::vector<Mat> riemannian_gradient(const std::vector<Projector>& points, const FlatPoints& pts,
                                     const DesignProblem& problem, const std::vector<double>& gaps) {
  std::vector<Mat> g = euclidean_gradient(pts, problem, gaps);
  for (std::size_t a = 0; a < points.size(); ++a) g[a] = tangent_project(g[a], points[a]).entries();
  return g;
}

double inner(const std::vector<Mat>& x, const std::vector<Mat>& y) {
  CompensatedSum s;
  for (std::size_t a = 0; a < x.size(); ++a) s += x[a].cwiseProduct(y[a]).sum();
  return s.value();
}

void check_problem(const PointConfiguration& config, const DesignProblem& problem) {
  if (!(config.space() == problem.space)) throw Error(ErrorCode::ShapeMismatch, "configuration space differs");
  if (problem.powers.size() != problem.targets.size()) {
    throw Error(ErrorCode::DomainError, "one target per power required");
  }
}

DesignResult run_cg(const DesignProblem& problem, std::vector<Projector> points, std::uint64_t seed, int restart) {
  const CgOptions& opt = problem.options;
  const int m = problem.space.m();

  FlatPoints flat(points, m);
  EnergyEval current = evaluate_energy(flat, problem);
  std::vector<Mat> grad = riemannian_gradient(points, flat, problem, current.gaps);
  std::vector<Mat> dir(grad.size());
  for (std::size_t a = 0; a < grad.size(); ++a) dir[a] = -grad[a];

  std::vector<double> history{current.energy};

  double step = 0.0;
  {
    double largest = 0.0;
    for (const Mat& d : dir) largest = std::max(largest, d.norm());
    // First trial moves no point by more than 0.1 in Frobenius norm.
    step = largest > 0.0 ? 0.05 / largest : 0.0;
  }

  int iter = 0;
  while (iter < opt.max_iters && current.energy > opt.energy_tol) {
    double slope = inner(grad, dir);
    const double gnorm2 = inner(grad, grad);
    if (gnorm2 == 0.0) break;
    if (!(slope < 0.0)) {
      for (std::size_t a = 0; a < grad.size(); ++a) dir[a] = -grad[a];
      slope = -gnorm2;
    }

    bool accepted = false;
    bool steepest = false;
    std::vector<Projector> trial_points;
    EnergyEval trial;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double alpha = 2.0 * step;
      for (int back = 0; back < 80; ++back, alpha *= opt.shrink) {
        trial_points.clear();
        bool collapsed = false;
        for (std::size_t a = 0; a < points.size() && !collapsed; ++a) {
          try {
            trial_points.push_back(retract(points[a], dir[a], alpha));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::EigengapCollapse) throw;
            collapsed = true;
          }
        }
        if (collapsed) continue;
        trial = evaluate_energy(FlatPoints(trial_points, m), problem);
        if (trial.energy <= current.energy + opt.armijo_c * alpha * slope) {
          accepted = true;
          step = alpha;
          break;
        }
      }
      if (!accepted && !steepest) {
        // Conjugate direction failed; retry once along the negative gradient.
        for (std::size_t a = 0; a < grad.size(); ++a) dir[a] = -grad[a];
        slope = -gnorm2;
        steepest = true;
      } else {
        break;
      }
    }
    if (!accepted) break;

    points = std::move(trial_points);
    flat = FlatPoints(points, m);
    current = std::move(trial);
    ++iter;
    history.push_back(current.energy);
    if (current.energy <= opt.energy_tol) break;

    std::vector<Mat> new_grad = riemannian_gradient(points, flat, problem, current.gaps);
    // Vector transport by re-projection onto the new tangent spaces.
    CompensatedSum num;
    for (std::size_t a = 0; a < points.size(); ++a) {
      const Mat old_g = tangent_project(grad[a], points[a]).entries();
      dir[a] = tangent_project(dir[a], points[a]).entries();
      num += new_grad[a].cwiseProduct(new_grad[a] - old_g).sum();
    }
    const double beta = std::max(0.0, num.value() / gnorm2);
    for (std::size_t a = 0; a < points.size(); ++a) dir[a] = -new_grad[a] + beta * dir[a];
    grad = std::move(new_grad);
  }

  DesignResult result{.config = PointConfiguration::equal_weights(std::move(points)),
                      .energy = current.energy,
                      .gaps = {},
                      .iterations = 0,
                      .converged = false,
                      .seed = seed,
                      .strength_index = problem.strength_index,
                      .strength = 0.0,
                      .under_provisioned = false,
                      .restart = restart,
                      .energy_history = std::move(history)};
  result.gaps = current.gaps;
  result.iterations = iter;
  result.converged = current.energy <= opt.energy_tol;
  result.seed = seed;
  result.strength_index = problem.strength_index;
  result.strength = design_strength(problem.strength_index, problem.space.k());
  result.under_provisioned = problem.under_provisioned();
  result.restart = restart;
  return result;
}

DesignResult run_restart(const DesignProblem& problem, std::uint64_t seed, int restart) {
  RandomStream rng(derive_seed(seed, {static_cast<std::uint64_t>(restart)}));
  std::vector<Projector> points;
  points.reserve(problem.n);
  for (std::size_t a = 0; a < problem.n; ++a) points.push_back(random_projector(problem.space, rng));
  return run_cg(problem, std::move(points), seed, restart);
}

}  // namespace

EnergyEval energy(const PointConfiguration& config, const DesignProblem& problem) {
  check_problem(config, problem);
  return evaluate_energy(FlatPoints(config.points(), problem.space.m()), problem);
}

std::vector<TangentVector> energy_gradient(const PointConfiguration& config, const DesignProblem& problem) {
  check_problem(config, problem);
  const FlatPoints flat(config.points(), problem.space.m());
  const EnergyEval e = evaluate_energy(flat, problem);
  const std::vector<Mat> g = euclidean_gradient(flat, problem, e.gaps);
  std::vector<TangentVector> out;
  out.reserve(g.size());
  for (std::size_t a = 0; a < g.size(); ++a) out.push_back(tangent_project(g[a], config.points()[a]));
  return out;
}

NoConvergence::NoConvergence(DesignResult best)
    : Error(ErrorCode::NoConvergence, "strength index " + std::to_string(best.strength_index) + ", n = " +
                                          std::to_string(best.config.size()) + ": best energy " +
                                          std::to_string(best.energy)),
      best_(std::move(best)) {}

DesignResult cg_minimize(const DesignProblem& problem, std::uint64_t seed) {
  const int restarts = std::max(1, problem.options.restarts);
  const int threads = std::max(1, problem.options.threads);

  std::vector<DesignResult> done;
  for (int first = 0; first < restarts; first += threads) {
    const int batch = std::min(threads, restarts - first);
    std::vector<std::optional<DesignResult>> slot(batch);
    if (batch == 1) {
      slot[0] = run_restart(problem, seed, first);
    } else {
      std::vector<std::jthread> pool;
      for (int b = 0; b < batch; ++b) {
        pool.emplace_back([&, b] { slot[b] = run_restart(problem, seed, first + b); });
      }
    }
    for (auto& s : slot) done.push_back(std::move(*s));
    // The lowest converged restart index wins, whatever the thread count.
    for (const auto& r : done) {
      if (r.converged) return r;
    }
  }
  auto best = std::min_element(done.begin(), done.end(),
                               [](const DesignResult& a, const DesignResult& b) { return a.energy < b.energy; });
  return *best;
}

DesignResult cg_minimize_from(const DesignProblem& problem, PointConfiguration start, std::uint64_t seed) {
  check_problem(start, problem);
  if (start.size() != problem.n) throw Error(ErrorCode::DomainError, "start size differs from problem n");
  return run_cg(problem, start.points(), seed, 0);
}

const DesignResult& require_converged(const DesignResult& result) {
  if (!result.converged) throw NoConvergence(result);
  return result;
}

DesignVerification verify_design(const DesignResult& result, const DesignProblem& problem, double tol) {
  const EnergyEval e = energy(result.config, problem);
  DesignVerification v;
  v.gaps = e.gaps;
  v.ok = true;
  for (double g : e.gaps) {
    v.max_abs_gap = std::max(v.max_abs_gap, std::abs(g));
    if (!(std::abs(g) <= tol) || g < -1e-10) v.ok = false;
  }
  return v;
}

DesignVerification verify_design(const DesignResult& result, double tol) {
  return verify_design(result, DesignProblem::make(result.strength_index, result.config.size()), tol);
}

}  // namespace gqmc
