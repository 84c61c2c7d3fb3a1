#include "gqmc/kernels.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "gqmc/error.hpp"
#include "gqmc/summation.hpp"

namespace gqmc {

namespace {

bool is_g24(const GrassmannSpace& s) { return s.k() == 2 && s.m() == 4; }

// Flattened projector entries; tr(PQ) is a plain dot product for symmetric P, Q.
std::vector<double> flatten(const std::vector<Projector>& points, int m) {
  const std::size_t stride = static_cast<std::size_t>(m) * m;
  std::vector<double> flat(points.size() * stride);
  for (std::size_t a = 0; a < points.size(); ++a) {
    const Mat& p = points[a].matrix();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) flat[a * stride + i * m + j] = p(i, j);
    }
  }
  return flat;
}

}  // namespace

TraceKernel::TraceKernel(std::string name, GrassmannSpace space, Profile profile, double khat0)
    : name_(std::move(name)), space_(space), profile_(std::move(profile)), khat0_(khat0) {
  if (!profile_) throw Error(ErrorCode::InvalidKernel, name_ + ": empty profile");
  const double kmax = space_.k();
  constexpr int kProbe = 64;
  for (int i = 0; i <= kProbe; ++i) {
    const double v = profile_(kmax * i / kProbe);
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidKernel, name_ + ": profile not finite on [0, k]");
  }
  diag_ = profile_(kmax);
  if (!(khat0_ > 0.0 && khat0_ <= diag_)) {
    throw Error(ErrorCode::InvalidKernel, name_ + ": need 0 < khat0 <= K(P,P)");
  }
}

TraceKernel kernel_k1() {
  constexpr double sqrt2 = std::numbers::sqrt2;
  const double khat0 = 2.0 + 74.0 / 75.0 * sqrt2 - 0.4 * std::log(1.0 + sqrt2);
  return TraceKernel(
      "K1", GrassmannSpace(2, 4),
      [](double r) {
        // tr(PP) can exceed 2 by an ulp.
        const double s = std::max(0.0, 2.0 - r);
        return std::sqrt(s * s * s) + 2.0 * r;
      },
      khat0);
}

TraceKernel kernel_k2() {
  const double khat0 = 1.5 * std::exp(-1.0) * shi(1.0);
  return TraceKernel("K2", GrassmannSpace(2, 4), [](double r) { return 1.5 * std::exp(-(2.0 - r)); }, khat0);
}

double shi(double x) {
  if (!(std::abs(x) <= 50.0)) throw Error(ErrorCode::DomainError, "shi: |x| must be <= 50");
  if (x == 0.0) return 0.0;
  const double x2 = x * x;
  double power = x;  // x^{2n+1} / (2n+1)!
  double result = 0.0;
  for (int n = 0; n < 400; ++n) {
    const double term = power / (2 * n + 1);
    result += term;
    if (std::abs(term) < 1e-17 * std::abs(result)) break;
    power *= x2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
  }
  return result;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::DomainError, "gauss_legendre: need n >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Three-term recurrence for P_n(x) and its derivative.
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

double khat0_quadrature(const TraceKernel& kernel, int nodes) {
  if (!is_g24(kernel.space())) {
    throw Error(ErrorCode::UnsupportedSpace, "double-integral reduction only holds on G(2,4)");
  }
  if (nodes < 8) throw Error(ErrorCode::DomainError, "khat0_quadrature: need at least 8 nodes");
  const QuadratureRule rule = gauss_legendre(nodes);
  CompensatedSum total;
  for (int a = 0; a < nodes; ++a) {
    CompensatedSum row;
    for (int b = 0; b < nodes; ++b) row += rule.weights[b] * kernel(1.0 + rule.nodes[a] * rule.nodes[b]);
    total += rule.weights[a] * row.value();
  }
  return 0.25 * total.value();
}

double moment_constant(int i, GrassmannSpace space) {
  if (!is_g24(space)) throw Error(ErrorCode::UnsupportedSpace, "closed-form moments only on G(2,4)");
  if (i < 1 || i > 16) throw Error(ErrorCode::DomainError, "moment_constant: need 1 <= i <= 16");
  // (1/4) int int (1 + x y)^i = sum over even j of C(i, j) / (j + 1)^2.
  boost::rational<std::int64_t> sum(0);
  for (int j = 0; j <= i; j += 2) {
    const auto binom = static_cast<std::int64_t>(boost::math::binomial_coefficient<double>(i, j) + 0.5);
    sum += boost::rational<std::int64_t>(binom, static_cast<std::int64_t>(j + 1) * (j + 1));
  }
  return boost::rational_cast<double>(sum);
}

PointConfiguration::PointConfiguration(std::vector<Projector> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw Error(ErrorCode::DomainError, "configuration must be nonempty");
  if (points_.size() != weights_.size()) throw Error(ErrorCode::ShapeMismatch, "one weight per point required");
  for (const auto& p : points_) {
    if (!(p.space() == points_.front().space())) {
      throw Error(ErrorCode::ShapeMismatch, "all points must lie on one Grassmannian");
    }
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw Error(ErrorCode::DomainError, "weights must be finite");
  }
}

PointConfiguration PointConfiguration::equal_weights(std::vector<Projector> points) {
  const std::size_t n = points.size();
  return PointConfiguration(std::move(points), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
}

WceReport wce_squared(const PointConfiguration& config, const TraceKernel& kernel) {
  if (!(config.space() == kernel.space())) {
    throw Error(ErrorCode::KernelSpaceMismatch, "kernel " + kernel.name() + " is defined on another space");
  }
  const int m = config.space().m();
  const std::size_t stride = static_cast<std::size_t>(m) * m;
  const std::size_t n = config.size();
  const auto& w = config.weights();
  const std::vector<double> flat = flatten(config.points(), m);

  CompensatedSum total;
  for (std::size_t a = 0; a < n; ++a) {
    const double* pa = &flat[a * stride];
    CompensatedSum row;
    for (std::size_t b = 0; b < n; ++b) {
      const double* pb = &flat[b * stride];
      double tr = 0.0;
      for (std::size_t e = 0; e < stride; ++e) tr += pa[e] * pb[e];
      row += w[b] * kernel(tr);
    }
    total += w[a] * row.value();
  }
  CompensatedSum weight_sum;
  for (double x : w) weight_sum += x;
  total += kernel.khat0() * (1.0 - 2.0 * weight_sum.value());

  WceReport report;
  report.kernel = kernel.name();
  report.n = n;
  report.wce_squared = total.value();
  if (report.wce_squared < 0.0) {
    if (report.wce_squared < -kNegativeClampTol) {
      throw Error(ErrorCode::NegativeWce, "wce^2 = " + std::to_string(report.wce_squared) +
                                              "; kernel " + kernel.name() + " is not positive definite");
    }
    report.clamped = true;
  }
  report.wce = std::sqrt(std::max(report.wce_squared, 0.0));
  return report;
}

double random_wce_constant(const TraceKernel& kernel) { return kernel.diag_value() - kernel.khat0(); }

double expected_random_wce(const TraceKernel& kernel, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::DomainError, "expected_random_wce: n >= 1");
  return std::sqrt(random_wce_constant(kernel)) / std::sqrt(static_cast<double>(n));
}

}  // namespace gqmc
