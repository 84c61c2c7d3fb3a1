#include "gqmc/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gqmc/error.hpp"

namespace gqmc {

namespace {

std::string residual_message(const char* what, double residual, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << what << " residual " << std::scientific << residual << " exceeds " << tol;
  return os.str();
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

GrassmannSpace::GrassmannSpace(int k, int m) : k_(k), m_(m) {
  if (m < 2 || m > kMaxAmbient || k < 1 || k > m - 1) {
    throw Error(ErrorCode::InvalidSpace, "G(" + std::to_string(k) + "," + std::to_string(m) +
                                             ") needs 1 <= k <= m-1 and m <= " + std::to_string(kMaxAmbient));
  }
}

Projector Projector::from_basis(const Mat& basis, GrassmannSpace space) {
  const int m = space.m();
  Mat p(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double v = basis.row(i).dot(basis.row(j));
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return Projector(std::move(p), basis, space);
}

Projector validate_projector(const Mat& m, GrassmannSpace space) {
  const int dim = space.m();
  if (m.rows() != dim || m.cols() != dim) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  const double sym = max_abs(m - m.transpose());
  if (!(sym <= kSymmetryTol)) throw Error(ErrorCode::NotSymmetric, residual_message("symmetry", sym, kSymmetryTol));
  const double idem = max_abs(m * m - m);
  if (!(idem <= kIdempotencyTol)) {
    throw Error(ErrorCode::NotIdempotent, residual_message("idempotency", idem, kIdempotencyTol));
  }
  const double tr = std::abs(m.trace() - space.k());
  if (!(tr <= kTraceTol)) throw Error(ErrorCode::WrongRank, residual_message("trace", tr, kTraceTol));

  // Eigenvalues of a projector cluster at {0, 1}; keep those above 1/2.
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  Mat basis(dim, space.k());
  int col = 0;
  for (int i = 0; i < dim; ++i) {
    if (eig.eigenvalues()(i) > 0.5) basis.col(col++) = eig.eigenvectors().col(i);
  }
  return Projector(m, std::move(basis), space);
}

Mat random_basis(GrassmannSpace space, RandomStream& rng) {
  const int m = space.m();
  const int k = space.k();
  for (int attempt = 0; attempt < 3; ++attempt) {
    Mat b(m, k);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) b(i, j) = rng.normal();
    }
    bool degenerate = false;
    for (int j = 0; j < k && !degenerate; ++j) {
      const double original = b.col(j).norm();
      // Gram-Schmidt twice is enough for full working accuracy.
      for (int pass = 0; pass < 2; ++pass) {
        for (int l = 0; l < j; ++l) b.col(j) -= b.col(l).dot(b.col(j)) * b.col(l);
      }
      const double norm = b.col(j).norm();
      if (!(norm > 1e-12 * original)) {
        degenerate = true;
      } else {
        b.col(j) /= norm;
      }
    }
    if (!degenerate) return b;
  }
  throw Error(ErrorCode::DegenerateDraw, "Gaussian draw rank-deficient three times in a row");
}

Projector random_projector(GrassmannSpace space, RandomStream& rng) {
  return Projector::from_basis(random_basis(space, rng), space);
}

PrincipalAngles principal_angles_from_bases(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "bases differ in shape");
  const int k = static_cast<int>(a.cols());
  const Mat cross = a.transpose() * b;
  const Mat residual = b - a * cross;
  // Singular values come back in decreasing order.
  const Eigen::JacobiSVD<Mat> svd_cos(cross);
  const Eigen::JacobiSVD<Mat> svd_sin(residual);
  const auto& cosines = svd_cos.singularValues();
  const auto& sines = svd_sin.singularValues();

  PrincipalAngles out;
  out.theta.resize(k);
  constexpr double kSwitch = std::numbers::sqrt2 / 2.0;
  for (int i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(k - 1 - i), 0.0, 1.0);
    out.theta[i] = c > kSwitch ? std::asin(s) : std::acos(c);
  }
  std::sort(out.theta.begin(), out.theta.end());
  return out;
}

PrincipalAngles principal_angles(const Projector& p, const Projector& q) {
  if (!(p.space() == q.space())) throw Error(ErrorCode::ShapeMismatch, "projectors live on different spaces");
  // The angles are symmetric in (P, Q) mathematically; evaluating the pair in
  // a canonical order makes them bitwise symmetric too.
  const Mat& a = p.matrix();
  const Mat& b = q.matrix();
  const bool swap = std::lexicographical_compare(b.data(), b.data() + b.size(), a.data(), a.data() + a.size());
  return swap ? principal_angles_from_bases(q.basis(), p.basis()) : principal_angles_from_bases(p.basis(), q.basis());
}

double geodesic_distance(const Projector& p, const Projector& q) {
  const PrincipalAngles angles = principal_angles(p, q);
  double sq = 0.0;
  for (double t : angles.theta) sq += t * t;
  return std::numbers::sqrt2 * std::sqrt(sq);
}

double trace_inner(const Projector& p, const Projector& q) {
  if (!(p.space() == q.space())) throw Error(ErrorCode::ShapeMismatch, "projectors live on different spaces");
  // Both symmetric: tr(PQ) is the entrywise inner product.
  return p.matrix().cwiseProduct(q.matrix()).sum();
}

TangentVector tangent_project(const Mat& g, const Projector& p) {
  const int m = p.space().m();
  if (g.rows() != m || g.cols() != m) throw Error(ErrorCode::ShapeMismatch, "gradient shape differs from projector");
  const Mat& pm = p.matrix();
  const Mat complement = Mat::Identity(m, m) - pm;
  const Mat half = pm * g * complement;
  return TangentVector(half + half.transpose(), p);
}

Projector retract(const Projector& p, const TangentVector& x, double step) { return retract(p, x.entries(), step); }

Projector retract(const Projector& p, const Mat& direction, double step) {
  const int m = p.space().m();
  const int k = p.space().k();
  Mat s = p.matrix() + step * direction;
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  const auto& lambda = eig.eigenvalues();
  if (lambda(m - k) - lambda(m - k - 1) < kEigengapTol) {
    throw Error(ErrorCode::EigengapCollapse, "k-th and (k+1)-th eigenvalues of P + tX coincide");
  }
  return Projector::from_basis(eig.eigenvectors().rightCols(k), p.space());
}

}  // namespace gqmc
