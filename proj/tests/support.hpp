#pragma once

#include <Eigen/QR>

#include <initializer_list>
#include <vector>

#include "gqmc/kernels.hpp"
#include "gqmc/manifold.hpp"
#include "gqmc/random.hpp"

namespace gqmc::test {

inline const GrassmannSpace kG24(2, 4);

inline Mat diag(std::initializer_list<double> d) {
  Mat m = Mat::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  int i = 0;
  for (double x : d) m(i, i) = x, ++i;
  return m;
}

inline Projector coord_plane(std::initializer_list<double> d) { return validate_projector(diag(d), kG24); }

/// Orthogonal matrix from the QR factorization of a Gaussian matrix.
inline Mat random_orthogonal(int m, RandomStream& rng) {
  Mat g(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(m, m);
}

inline Projector conjugate(const Projector& p, const Mat& u) {
  return Projector::from_basis(u * p.basis(), p.space());
}

inline Mat random_symmetric(int m, RandomStream& rng) {
  Mat g(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) g(i, j) = g(j, i) = rng.normal();
  }
  return g;
}

inline std::vector<Projector> random_points(std::size_t n, RandomStream& rng, GrassmannSpace space = kG24) {
  std::vector<Projector> out;
  for (std::size_t a = 0; a < n; ++a) out.push_back(random_projector(space, rng));
  return out;
}

inline double frobenius(const Projector& p, const Projector& q) { return (p.matrix() - q.matrix()).norm(); }

}  // namespace gqmc::test
