#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gqmc/manifold.hpp"

namespace gqmc {

/// Kernel of the form K(P, Q) = k(tr(PQ)) on one Grassmannian.
///
/// The diagonal K(P, P) = k(k_sub) is constant because tr(P^2) = k_sub.
/// khat0 is the double integral of K against the invariant measure; it is
/// known in closed form on G(2,4) for the two built-in kernels and must be
/// supplied by the caller otherwise.
class TraceKernel {
 public:
  using Profile = std::function<double(double)>;

  /// Throws InvalidKernel unless 0 < khat0 <= k(k_sub) and the profile is
  /// finite on [0, k_sub].
  TraceKernel(std::string name, GrassmannSpace space, Profile profile, double khat0);

  const std::string& name() const { return name_; }
  const GrassmannSpace& space() const { return space_; }
  double operator()(double r) const { return profile_(r); }
  double diag_value() const { return diag_; }
  double khat0() const { return khat0_; }

 private:
  std::string name_;
  GrassmannSpace space_;
  Profile profile_;
  double diag_;
  double khat0_;
};

/// sqrt((2 - r)^3) + 2 r on G(2,4); its RKHS is W^{7/2}_2 with an
/// equivalent norm.
TraceKernel kernel_k1();

/// (3/2) exp(r - 2) on G(2,4).
TraceKernel kernel_k2();

/// Hyperbolic sine integral, by its Maclaurin series. |x| <= 50.
double shi(double x);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// (1/4) int int k(1 + x y) dx dy over [-1,1]^2 with a tensor Gauss-Legendre
/// rule; equals khat0 on G(2,4). Independent of the closed forms.
double khat0_quadrature(const TraceKernel& kernel, int nodes);

/// c_i = int int tr(PQ)^i dmu dmu on G(2,4), summed exactly in rationals.
/// 1 <= i <= 16. Throws UnsupportedSpace elsewhere.
double moment_constant(int i, GrassmannSpace space = GrassmannSpace(2, 4));

class PointConfiguration {
 public:
  PointConfiguration(std::vector<Projector> points, std::vector<double> weights);

  static PointConfiguration equal_weights(std::vector<Projector> points);

  const std::vector<Projector>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }
  const GrassmannSpace& space() const { return points_.front().space(); }

 private:
  std::vector<Projector> points_;
  std::vector<double> weights_;
};

struct WceReport {
  std::string kernel;
  std::size_t n = 0;
  double wce_squared = 0.0;
  double wce = 0.0;
  bool clamped = false;
};

inline constexpr double kNegativeClampTol = 1e-10;

/// sum_{a,b} w_a w_b K(P_a, P_b) + khat0 (1 - 2 sum_a w_a), compensated and in
/// index order. Values in [-1e-10, 0) are clamped to zero and flagged.
WceReport wce_squared(const PointConfiguration& config, const TraceKernel& kernel);

/// K(P,P) - khat0: expected n * wce^2 for i.i.d. uniform points.
double random_wce_constant(const TraceKernel& kernel);

double expected_random_wce(const TraceKernel& kernel, std::size_t n);

}  // namespace gqmc
