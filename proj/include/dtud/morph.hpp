#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "dtud/error.hpp"

namespace dtud {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Thin-plate kernel r^2 ln r, continuous at r = 0.
inline double tps_kernel(double r) {
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r);
}

struct ControlPointSet {
  Points original;
  Points displaced;
};

/// Thin-plate interpolant plus affine part:
///   f(x) = sum_j weights_j * phi(|x - control_j|) + x * affine + offset.
struct MorphMap {
  Eigen::Matrix<double, Eigen::Dynamic, 3> weights;
  Eigen::Matrix3d affine = Eigen::Matrix3d::Identity();
  Eigen::RowVector3d offset = Eigen::RowVector3d::Zero();
  Points control;
  /// Reciprocal condition estimate of the saddle-point matrix (1-norm).
  double rcond = 0.0;
  double regularization = 0.0;
};

/// Saddle-point matrix [[A + lambda I, B], [B^T, 0]] with A_ij = phi(|X_i - X_j|)
/// and B = [1 X Y Z].
inline Eigen::MatrixXd morph_system(const Points& control, double regularization = 0.0) {
  const Eigen::Index n = control.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n + 4, n + 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = tps_kernel((control.row(i) - control.row(j)).norm());
    s(i, i) += regularization;
    s(i, n) = 1.0;
    s(n, i) = 1.0;
    for (int c = 0; c < 3; ++c) {
      s(i, n + 1 + c) = control(i, c);
      s(n + 1 + c, i) = control(i, c);
    }
  }
  return s;
}

/// Smallest reciprocal condition accepted before the fit is declared degenerate.
inline constexpr double kMinMorphRcond = 1e-14;

inline MorphMap fit_morph(const ControlPointSet& cps, double regularization = 0.0) {
  const Eigen::Index n = cps.original.rows();
  if (n < 4) fail(ErrorKind::InvalidParameter, "morphing needs at least 4 control points");
  if (cps.displaced.rows() != n) fail(ErrorKind::InvalidParameter, "original and displaced point counts differ");
  if (!cps.original.allFinite() || !cps.displaced.allFinite())
    fail(ErrorKind::InvalidParameter, "control points must be finite");
  if (regularization < 0.0) fail(ErrorKind::InvalidParameter, "regularization must be >= 0");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((cps.original.row(i) - cps.original.row(j)).norm() == 0.0) {
        std::ostringstream msg;
        msg << "control points " << i << " and " << j << " coincide (condition estimate inf)";
        fail(ErrorKind::Conditioning, msg.str());
      }

  const Eigen::MatrixXd system = morph_system(cps.original, regularization);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 4, 3);
  rhs.topRows(n) = cps.displaced;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinMorphRcond) || !lu.isInvertible()) {
    std::ostringstream msg;
    msg << "control point layout is degenerate (condition estimate " << (rcond > 0.0 ? 1.0 / rcond : INFINITY)
        << ")";
    fail(ErrorKind::Conditioning, msg.str());
  }
  const Eigen::MatrixXd solution = lu.solve(rhs);
  const double residual = (system * solution - rhs).norm() / std::max(1.0, rhs.norm());
  if (!(residual < 1e-8)) {
    std::ostringstream msg;
    msg << "morph solve residual " << residual << " too large (condition estimate " << 1.0 / rcond << ")";
    fail(ErrorKind::Conditioning, msg.str());
  }

  MorphMap map;
  map.weights = solution.topRows(n);
  map.offset = solution.row(n);
  map.affine = solution.bottomRows(3);
  map.control = cps.original;
  map.rcond = rcond;
  map.regularization = regularization;
  return map;
}

inline Points apply_morph(const MorphMap& map, const Points& nodes) {
  Points out(nodes.rows(), 3);
  const Eigen::Index n = map.control.rows();
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    Eigen::RowVector3d p = nodes.row(i) * map.affine + map.offset;
    for (Eigen::Index j = 0; j < n; ++j)
      p += tps_kernel((nodes.row(i) - map.control.row(j)).norm()) * map.weights.row(j);
    out.row(i) = p;
  }
  return out;
}

}  // namespace dtud
