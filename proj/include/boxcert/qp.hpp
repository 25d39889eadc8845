#pragma once

// Small dense convex QP via a primal active-set method:
//   min 1/2 x^T H x + q^T x   s.t.  G x <= b
// H positive definite, feasible start required.  Sized for the bundle
// method's inner problems (a few dozen variables and rows).

#include <Eigen/Dense>
#include <vector>

namespace boxcert {

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per row of G, >= 0
  bool ok = false;
  int iterations = 0;
};

inline QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& x0, int maxIter = 0) {
  const int d = (int)x0.size();
  const int mrows = (int)G.rows();
  if (maxIter <= 0) maxIter = 50 * (d + mrows + 1);
  const double tol = 1e-10;

  QpResult res;
  res.x = x0;
  res.multipliers = Eigen::VectorXd::Zero(mrows);

  std::vector<int> W;  // working set of active rows
  Eigen::VectorXd resid = G * res.x - b;
  for (int r = 0; r < mrows && (int)W.size() < d; ++r)
    if (resid(r) > -tol) W.push_back(r);

  for (int it = 0; it < maxIter; ++it) {
    res.iterations = it + 1;
    const int na = (int)W.size();
    Eigen::VectorXd grad = H * res.x + q;

    // Equality-constrained step: min over p with G_W p = 0.
    Eigen::MatrixXd K(d + na, d + na);
    K.setZero();
    K.topLeftCorner(d, d) = H;
    for (int a = 0; a < na; ++a) {
      K.block(0, d + a, d, 1) = G.row(W[a]).transpose();
      K.block(d + a, 0, 1, d) = G.row(W[a]);
    }
    Eigen::VectorXd rhs(d + na);
    rhs.head(d) = -grad;
    rhs.tail(na).setZero();
    Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd p = sol.head(d);
    Eigen::VectorXd lam = sol.tail(na);

    if (p.norm() <= tol * (1.0 + res.x.norm())) {
      // Stationary on the working set; check multipliers.
      int drop = -1;
      double most = -tol;
      for (int a = 0; a < na; ++a)
        if (lam(a) < most) {
          most = lam(a);
          drop = a;
        }
      if (drop < 0) {
        res.multipliers.setZero();
        for (int a = 0; a < na; ++a) res.multipliers(W[a]) = std::max(0.0, lam(a));
        res.ok = true;
        return res;
      }
      W.erase(W.begin() + drop);
      continue;
    }

    // Ratio test against inactive rows.
    double alpha = 1.0;
    int blocking = -1;
    for (int r = 0; r < mrows; ++r) {
      bool inW = false;
      for (int a : W)
        if (a == r) { inW = true; break; }
      if (inW) continue;
      double gp = G.row(r).dot(p);
      if (gp > tol) {
        double slack = b(r) - G.row(r).dot(res.x);
        double a = slack / gp;
        if (a < alpha) {
          alpha = a;
          blocking = r;
        }
      }
    }
    res.x += std::max(0.0, alpha) * p;
    if (blocking >= 0 && (int)W.size() < d) W.push_back(blocking);
  }

  // Iteration cap; return the current (feasible) point.
  res.ok = false;
  return res;
}

}  // namespace boxcert
