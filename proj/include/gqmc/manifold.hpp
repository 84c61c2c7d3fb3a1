#pragma once

#include <Eigen/Core>

#include <vector>

#include "gqmc/random.hpp"

namespace gqmc {

inline constexpr int kMaxAmbient = 8;

/// Small dense matrices with stack storage; ambient dimensions above
/// kMaxAmbient are rejected when a GrassmannSpace is built.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxAmbient, kMaxAmbient>;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kIdempotencyTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kTangencyTol = 1e-10;
inline constexpr double kEigengapTol = 1e-12;

/// G(k, m): k-dimensional subspaces of R^m, d = k (m - k).
class GrassmannSpace {
 public:
  GrassmannSpace(int k, int m);

  int k() const { return k_; }
  int m() const { return m_; }
  int dim() const { return k_ * (m_ - k_); }

  bool operator==(const GrassmannSpace&) const = default;

 private:
  int k_;
  int m_;
};

/// Rank-k orthogonal projector. Always carries an orthonormal m x k basis
/// of its range alongside the matrix.
class Projector {
 public:
  const Mat& matrix() const { return matrix_; }
  const Mat& basis() const { return basis_; }
  const GrassmannSpace& space() const { return space_; }

  /// P = B B^T for B with orthonormal columns. The product is formed
  /// entrywise so that P is exactly symmetric.
  static Projector from_basis(const Mat& basis, GrassmannSpace space);

 private:
  Projector(Mat matrix, Mat basis, GrassmannSpace space)
      : matrix_(std::move(matrix)), basis_(std::move(basis)), space_(space) {}

  friend Projector validate_projector(const Mat& m, GrassmannSpace space);

  Mat matrix_;
  Mat basis_;
  GrassmannSpace space_;
};

struct PrincipalAngles {
  std::vector<double> theta;  // ascending, each in [0, pi/2]
};

class TangentVector {
 public:
  TangentVector(Mat entries, Projector base) : entries_(std::move(entries)), base_(std::move(base)) {}

  const Mat& entries() const { return entries_; }
  const Projector& base() const { return base_; }

 private:
  Mat entries_;
  Projector base_;
};

/// Throws NotSymmetric / NotIdempotent / WrongRank with the residual.
Projector validate_projector(const Mat& m, GrassmannSpace space);

/// Haar-distributed point: orthonormalized Gaussian m x k matrix.
Projector random_projector(GrassmannSpace space, RandomStream& rng);

/// Orthonormal basis of a Haar-distributed subspace (the basis behind
/// random_projector, without forming the projector).
Mat random_basis(GrassmannSpace space, RandomStream& rng);

/// Principal angles between ranges of two orthonormal bases. Cosines are the
/// singular values of A^T B; angles below pi/4 are taken from the sines
/// (singular values of B - A A^T B) where arccos loses accuracy.
PrincipalAngles principal_angles_from_bases(const Mat& a, const Mat& b);

PrincipalAngles principal_angles(const Projector& p, const Projector& q);

/// sqrt(2) * ||theta||_2
double geodesic_distance(const Projector& p, const Projector& q);

/// tr(P Q) = sum cos^2 theta_i, in [0, k].
double trace_inner(const Projector& p, const Projector& q);

/// P G (I - P) + (I - P) G P
TangentVector tangent_project(const Mat& g, const Projector& p);

/// Spectral projection of P + step * X onto its top-k eigenspace. Throws
/// EigengapCollapse when the k-th and (k+1)-th eigenvalues coincide.
Projector retract(const Projector& p, const TangentVector& x, double step);

/// Same, for a raw symmetric direction assumed tangent at p.
Projector retract(const Projector& p, const Mat& direction, double step);

}  // namespace gqmc
