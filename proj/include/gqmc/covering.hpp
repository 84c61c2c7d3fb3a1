#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gqmc/kernels.hpp"
#include "gqmc/manifold.hpp"

namespace gqmc {

/// Probe points R_1..R_n stored as orthonormal bases, packed row-major.
/// Probe j is drawn from RandomStream(derive_seed(seed, {j})), so any
/// prefix of a larger probe set is the smaller probe set.
class ProbeSet {
 public:
  static ProbeSet uniform(GrassmannSpace space, std::size_t count, std::uint64_t seed, int threads = 1);
  static ProbeSet from_projectors(std::span<const Projector> probes);

  const GrassmannSpace& space() const { return space_; }
  std::size_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  const double* basis(std::size_t j) const { return &data_[j * stride_]; }

 private:
  ProbeSet(GrassmannSpace space, std::size_t count, std::uint64_t seed)
      : space_(space), count_(count), seed_(seed), stride_(static_cast<std::size_t>(space.m()) * space.k()),
        data_(count * stride_) {}

  GrassmannSpace space_;
  std::size_t count_;
  std::uint64_t seed_;
  std::size_t stride_;
  std::vector<double> data_;
};

struct CoveringEstimate {
  double rho_hat = 0.0;
  std::size_t probes = 0;
  std::uint64_t probe_seed = 0;
  double expected_probe_covering = 0.0;
  double upper_hint = 0.0;
};

/// Largest possible geodesic distance: sqrt(2 min(k, m-k)) * pi / 2.
double diameter(GrassmannSpace space);

/// max over probes of the min geodesic distance to the configuration.
CoveringEstimate covering_radius_estimate(const PointConfiguration& config, const ProbeSet& probes, int threads = 1);

/// Same, drawing `probes` uniform probes from `seed` on the fly.
CoveringEstimate covering_radius_estimate(const PointConfiguration& config, std::size_t probes, std::uint64_t seed,
                                          int threads = 1);

double multivariate_gamma(int k, double x);

/// Volume of G(k,m) under the sqrt(2)-scaled metric.
double grassmann_volume(GrassmannSpace space);

double ball_volume(int d);

/// (vol(G) / vol(B_d) * log(n) / n)^{1/d}; the large-n covering radius of n
/// uniform random points.
double expected_random_covering(GrassmannSpace space, double n);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares on (log n, log value). Needs >= 3 pairs and positive values.
SlopeFit slope_fit(std::span<const std::pair<double, double>> pairs);

}  // namespace gqmc
