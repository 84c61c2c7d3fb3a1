#include "gqmc/covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "gqmc/error.hpp"
#include "gqmc/random.hpp"

namespace gqmc {

namespace {

// Runs body(begin, end, slot) over `threads` contiguous chunks of [0, count).
template <class Body>
void parallel_chunks(std::size_t count, int threads, Body body) {
  const std::size_t t = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (t == 1) {
    body(0, count, 0);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t s = 0; s < t; ++s) {
    const std::size_t begin = count * s / t;
    const std::size_t end = count * (s + 1) / t;
    pool.emplace_back([=, &body] { body(begin, end, s); });
  }
}

Mat unpack(const double* data, int m, int k) {
  Mat b(m, k);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < k; ++l) b(i, l) = data[i * k + l];
  }
  return b;
}

void pack(const Mat& b, double* out) {
  const auto m = b.rows();
  const auto k = b.cols();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index l = 0; l < k; ++l) out[i * k + l] = b(i, l);
  }
}

double distance_from_bases(const Mat& a, const Mat& b) {
  double sq = 0.0;
  for (double t : principal_angles_from_bases(a, b).theta) sq += t * t;
  return std::numbers::sqrt2 * std::sqrt(sq);
}

// Closed-form path for 2-planes. Cosines are the singular values of the
// 2x2 cross-Gram, squared sines the eigenvalues of the Gram of B - A A^T B;
// the smaller root of each quadratic is taken as det / larger root.
double distance_k2(const double* a, const double* b, int m, double c00, double c01, double c10, double c11) {
  double g00 = 0.0, g01 = 0.0, g11 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double r0 = b[i * 2] - (a[i * 2] * c00 + a[i * 2 + 1] * c10);
    const double r1 = b[i * 2 + 1] - (a[i * 2] * c01 + a[i * 2 + 1] * c11);
    g00 += r0 * r0;
    g01 += r0 * r1;
    g11 += r1 * r1;
  }
  const double s = c00 * c00 + c01 * c01 + c10 * c10 + c11 * c11;
  const double det = c00 * c11 - c01 * c10;
  const double big2 = 0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * det * det)));
  const double cos_big = std::sqrt(big2);
  const double cos_small = big2 > 0.0 ? std::abs(det) / cos_big : 0.0;

  const double gt = g00 + g11;
  const double gd = std::max(0.0, g00 * g11 - g01 * g01);
  const double lam_big = 0.5 * (gt + std::sqrt(std::max(0.0, (g00 - g11) * (g00 - g11) + 4.0 * g01 * g01)));
  const double sin_big = std::sqrt(lam_big);
  const double sin_small = lam_big > 0.0 ? std::sqrt(gd / lam_big) : 0.0;

  constexpr double kSwitch = std::numbers::sqrt2 / 2.0;
  auto angle = [&](double c, double sn) {
    c = std::clamp(c, 0.0, 1.0);
    return c > kSwitch ? std::asin(std::min(sn, 1.0)) : std::acos(c);
  };
  const double t1 = angle(cos_big, sin_small);
  const double t2 = angle(cos_small, sin_big);
  return std::numbers::sqrt2 * std::sqrt(t1 * t1 + t2 * t2);
}

// Nearest geodesic distance from one probe to the configuration. Points
// whose Frobenius distance (a lower bound for the geodesic one) already
// exceeds the running minimum are skipped without computing angles.
double nearest_distance(const std::vector<double>& config, std::size_t n, const double* probe, int m, int k) {
  const std::size_t stride = static_cast<std::size_t>(m) * k;
  double best = std::numeric_limits<double>::infinity();
  double best2 = best;
  if (k == 2) {
    for (std::size_t a = 0; a < n; ++a) {
      const double* pa = &config[a * stride];
      double c00 = 0.0, c01 = 0.0, c10 = 0.0, c11 = 0.0;
      for (int i = 0; i < m; ++i) {
        c00 += pa[i * 2] * probe[i * 2];
        c01 += pa[i * 2] * probe[i * 2 + 1];
        c10 += pa[i * 2 + 1] * probe[i * 2];
        c11 += pa[i * 2 + 1] * probe[i * 2 + 1];
      }
      const double frob2 = 2.0 * (2.0 - (c00 * c00 + c01 * c01 + c10 * c10 + c11 * c11));
      if (frob2 > best2 * (1.0 + 1e-9) + 1e-14) continue;
      const double d = distance_k2(pa, probe, m, c00, c01, c10, c11);
      if (d < best) {
        best = d;
        best2 = d * d;
      }
    }
    return best;
  }
  const Mat r = unpack(probe, m, k);
  for (std::size_t a = 0; a < n; ++a) {
    const double* pa = &config[a * stride];
    double tr = 0.0;
    for (int l = 0; l < k; ++l) {
      for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += pa[i * k + l] * probe[i * k + c];
        tr += s * s;
      }
    }
    const double frob2 = 2.0 * (k - tr);
    if (frob2 > best2 * (1.0 + 1e-9) + 1e-14) continue;
    const double d = distance_from_bases(unpack(pa, m, k), r);
    if (d < best) {
      best = d;
      best2 = d * d;
    }
  }
  return best;
}

}  // namespace

ProbeSet ProbeSet::uniform(GrassmannSpace space, std::size_t count, std::uint64_t seed, int threads) {
  ProbeSet set(space, count, seed);
  parallel_chunks(count, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t j = begin; j < end; ++j) {
      RandomStream rng(derive_seed(seed, {j}));
      pack(random_basis(space, rng), &set.data_[j * set.stride_]);
    }
  });
  return set;
}

ProbeSet ProbeSet::from_projectors(std::span<const Projector> probes) {
  if (probes.empty()) throw Error(ErrorCode::DomainError, "probe set must be nonempty");
  ProbeSet set(probes.front().space(), probes.size(), 0);
  for (std::size_t j = 0; j < probes.size(); ++j) {
    if (!(probes[j].space() == set.space_)) throw Error(ErrorCode::ShapeMismatch, "probes on different spaces");
    pack(probes[j].basis(), &set.data_[j * set.stride_]);
  }
  return set;
}

double diameter(GrassmannSpace space) {
  return std::sqrt(2.0 * std::min(space.k(), space.m() - space.k())) * std::numbers::pi / 2.0;
}

CoveringEstimate covering_radius_estimate(const PointConfiguration& config, const ProbeSet& probes, int threads) {
  if (!(config.space() == probes.space())) throw Error(ErrorCode::ShapeMismatch, "probes on another space");
  if (probes.size() < 1) throw Error(ErrorCode::DomainError, "need at least one probe");
  const int m = config.space().m();
  const int k = config.space().k();
  const std::size_t stride = static_cast<std::size_t>(m) * k;
  std::vector<double> bases(config.size() * stride);
  for (std::size_t a = 0; a < config.size(); ++a) pack(config.points()[a].basis(), &bases[a * stride]);

  const std::size_t slots = static_cast<std::size_t>(std::max(threads, 1));
  std::vector<double> partial(slots, 0.0);
  parallel_chunks(probes.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t slot) {
    double worst = 0.0;
    for (std::size_t j = begin; j < end; ++j) {
      worst = std::max(worst, nearest_distance(bases, config.size(), probes.basis(j), m, k));
    }
    partial[slot] = worst;
  });

  CoveringEstimate est;
  est.rho_hat = *std::max_element(partial.begin(), partial.end());
  est.probes = probes.size();
  est.probe_seed = probes.seed();
  est.expected_probe_covering = probes.size() >= 2
                                    ? expected_random_covering(config.space(), static_cast<double>(probes.size()))
                                    : diameter(config.space());
  est.upper_hint = est.rho_hat + est.expected_probe_covering;
  return est;
}

CoveringEstimate covering_radius_estimate(const PointConfiguration& config, std::size_t probes, std::uint64_t seed,
                                          int threads) {
  if (probes < 1) throw Error(ErrorCode::DomainError, "need at least one probe");
  return covering_radius_estimate(config, ProbeSet::uniform(config.space(), probes, seed, threads), threads);
}

double multivariate_gamma(int k, double x) {
  if (k < 1) throw Error(ErrorCode::DomainError, "multivariate_gamma: k >= 1");
  if (!(x > 0.5 * (k - 1))) throw Error(ErrorCode::DomainError, "multivariate_gamma: need x > (k-1)/2");
  double out = std::pow(std::numbers::pi, k * (k - 1) / 4.0);
  for (int i = 1; i <= k; ++i) out *= std::tgamma(x + (1.0 - i) / 2.0);
  return out;
}

double grassmann_volume(GrassmannSpace space) {
  const int k = space.k();
  return multivariate_gamma(k, k / 2.0) / multivariate_gamma(k, space.m() / 2.0) *
         std::pow(2.0 * std::numbers::pi, space.dim() / 2.0);
}

double ball_volume(int d) {
  if (d < 1) throw Error(ErrorCode::DomainError, "ball_volume: d >= 1");
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double expected_random_covering(GrassmannSpace space, double n) {
  if (!(n >= 2.0)) throw Error(ErrorCode::DomainError, "expected_random_covering: n >= 2");
  const int d = space.dim();
  return std::pow(grassmann_volume(space) / ball_volume(d) * std::log(n) / n, 1.0 / d);
}

SlopeFit slope_fit(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw Error(ErrorCode::InsufficientData, "slope_fit needs at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0) || !(v > 0.0)) throw Error(ErrorCode::NonPositiveValue, "log-log fit needs positive n and value");
    sx += std::log(n);
    sy += std::log(v);
  }
  const double count = static_cast<double>(pairs.size());
  const double mx = sx / count;
  const double my = sy / count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [n, v] : pairs) {
    const double dx = std::log(n) - mx;
    const double dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientData, "slope_fit needs at least two distinct n");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = std::max(0.0, syy - fit.slope * sxy);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace gqmc
