#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Central-difference Jacobian of fn at point, error O(h^2).
inline MatX finite_diff_jacobian(const std::function<VecX(const VecX&)>& fn,
                                 const VecX& point, double h) {
  if (!(h > 0.0)) throw DomainError("h must be > 0");
  const VecX f0 = fn(point);
  MatX jac(f0.size(), point.size());
  VecX x = point;
  for (int j = 0; j < point.size(); ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    const VecX fp = fn(x);
    x[j] = xj - h;
    const VecX fm = fn(x);
    x[j] = xj;
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  bool passed = true;

  std::string worst_coordinate() const {
    return "(" + std::to_string(worst_row) + "," + std::to_string(worst_col) + ")";
  }
};

/// Elementwise comparison of an analytic Jacobian/gradient against a numeric
/// one. An element passes if |a - n| <= abs_tol + rel_tol * max(|a|, |n|).
inline GradCheckReport grad_check(const MatX& analytic, const MatX& numeric,
                                  double rel_tol, double abs_tol) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw DomainError("grad_check: shape mismatch");
  }
  GradCheckReport rep;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j);
      const double n = numeric(i, j);
      const double abs_err = std::abs(a - n);
      const double scale = std::max(std::abs(a), std::abs(n));
      const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
      if (abs_err > rep.max_abs_err) rep.max_abs_err = abs_err;
      if (rel_err > rep.max_rel_err &&
          abs_err > abs_tol) {  // ignore rel error where both are ~0
        rep.max_rel_err = rel_err;
        rep.worst_row = i;
        rep.worst_col = j;
      }
      if (abs_err > abs_tol + rel_tol * scale) rep.passed = false;
    }
  }
  return rep;
}

inline GradCheckReport grad_check(const VecX& analytic, const VecX& numeric,
                                  double rel_tol, double abs_tol) {
  return grad_check(MatX(analytic), MatX(numeric), rel_tol, abs_tol);
}

}  // namespace mlpcpg
