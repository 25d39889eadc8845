#pragma once

// Starting point construction: initial box, midpoint z, the sign rule for y,
// S from C(y), and the modified Cholesky factorization Ahat = Rhat^T Rhat - D
// that makes A(y,R,S) positive semidefinite with R = D^(1/2).

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "boxcert/certificate.hpp"
#include "boxcert/model.hpp"

namespace boxcert {

struct StartOptions {
  bool strictInterior = false;
  double t0 = 0.1;
  double t1 = 0.9;
  Eigen::VectorXd r;  // minimum box size, empty means zero
};

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> initial_box(const BoxVec& domain,
                                                               const StartOptions& opts) {
  const int n = (int)domain.size();
  Eigen::VectorXd r = opts.r.size() ? opts.r : Eigen::VectorXd::Zero(n);
  if (r.size() != n) throw std::invalid_argument("initial_box: r has wrong length");
  Eigen::VectorXd u0(n), v0(n);
  if (!opts.strictInterior) {
    for (int i = 0; i < n; ++i) {
      u0(i) = domain[i].lo;
      v0(i) = domain[i].hi;
    }
    return {u0, v0};
  }
  if (!(0.0 < opts.t0 && opts.t0 < opts.t1 && opts.t1 < 1.0))
    throw std::invalid_argument("initial_box: need 0 < t0 < t1 < 1");
  for (int i = 0; i < n; ++i) {
    const double lo = domain[i].lo, hi = domain[i].hi;
    u0(i) = (1.0 - opts.t0) * lo + opts.t0 * (hi - r(i));
    v0(i) = (1.0 - opts.t1) * (lo + r(i)) + opts.t1 * hi;
    if (!(u0(i) + r(i) < v0(i)))
      throw std::invalid_argument("initial_box: r too large, u0 + r >= v0 at component " +
                                  std::to_string(i));
  }
  return {u0, v0};
}

inline Eigen::VectorXd initial_z(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0) {
  return 0.5 * (u0 + v0);
}

// Sign rule: make max(0, Y(y0, z0)) as large as possible.
inline Eigen::VectorXd initial_y(const Eigen::VectorXd& Fz,
                                 const std::vector<Interval>& Frange) {
  const int m = (int)Fz.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < m; ++k) {
    const double lo = Frange[k].lo, hi = Frange[k].hi;
    if (lo == -kInf) {
      y(k) = (hi < Fz(k)) ? -1.0 : 0.0;
    } else if (hi == kInf) {
      y(k) = (Fz(k) < lo) ? 1.0 : 0.0;
    } else {
      if (Fz(k) < lo)
        y(k) = 1.0;
      else if (hi < Fz(k))
        y(k) = -1.0;
    }
  }
  return y;
}

// S = -1/2 * strict upper part of C(y)^T, so Ahat = C(y) + S^T - S is the
// symmetrization with diag(Ahat) = diag(C(y)) and off-diagonal halved.
inline Eigen::MatrixXd build_S(const Eigen::MatrixXd& Cy) {
  const int n = (int)Cy.rows();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) S(i, j) = -0.5 * Cy(j, i);
  return S;
}

inline double default_cholesky_delta(const Eigen::MatrixXd& Ahat) {
  return 1e-8 * std::max(1.0, Ahat.cwiseAbs().rowwise().sum().maxCoeff());
}

// Left-looking Cholesky with raised pivots: the pivot becomes
// max(p, delta, theta^2/beta^2) where theta is the largest updated
// off-diagonal in the column and beta^2 = max(gamma, xi/sqrt(n^2-1), eps)
// (gamma/xi: largest |diagonal| / |off-diagonal| of Ahat).  The last term
// bounds the factor entries by beta, so neither the factor nor D can blow
// up on indefinite input; a bare "raise to delta" cascades catastrophically.
// Returns upper-triangular Rhat and the diagonal of D, with
// Rhat^T Rhat - D = Ahat and D >= 0; D = 0 whenever the unmodified
// factorization succeeds with pivots >= delta.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> modified_cholesky(
    const Eigen::MatrixXd& Ahat, double delta) {
  const int n = (int)Ahat.rows();
  if (delta <= 0.0) throw std::invalid_argument("modified_cholesky: delta must be positive");
  double gamma = 0.0, xi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      (i == j ? gamma : xi) = std::max(i == j ? gamma : xi, std::abs(Ahat(i, j)));
  double beta2 = std::max(gamma, std::numeric_limits<double>::epsilon());
  if (n > 1) beta2 = std::max(beta2, xi / std::sqrt(double(n) * n - 1.0));

  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd D = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s(n);
  for (int j = 0; j < n; ++j) {
    double p = Ahat(j, j);
    for (int k = 0; k < j; ++k) p -= R(k, j) * R(k, j);
    double theta = 0.0;
    for (int l = j + 1; l < n; ++l) {
      double v = Ahat(j, l);
      for (int k = 0; k < j; ++k) v -= R(k, j) * R(k, l);
      s(l) = v;
      theta = std::max(theta, std::abs(v));
    }
    double q = std::max({p, delta, theta * theta / beta2});
    if (q > p) D(j) = q - p;
    R(j, j) = std::sqrt(q);
    for (int l = j + 1; l < n; ++l) R(j, l) = s(l) / R(j, j);
  }
  return {R, D};
}

struct StartResult {
  bool feasible = false;
  Eigen::VectorXd feasiblePoint;  // z0 when feasible
  CertPoint point;
};

inline StartResult starting_point(const QuadraticCsp& csp, const StartOptions& opts,
                                  const TChoice& /*choice*/) {
  StartResult res;
  auto [u0, v0] = initial_box(csp.domain, opts);
  Eigen::VectorXd z0 = initial_z(u0, v0);
  Eigen::VectorXd Fz = eval_F(csp, z0);
  bool feasible = true;
  for (int k = 0; k < csp.m; ++k)
    if (!contains(csp.Frange[k], Fz(k))) feasible = false;
  if (feasible) {
    res.feasible = true;
    res.feasiblePoint = z0;
    return res;
  }

  CertPoint p = CertPoint::zeros(csp.m, csp.n);
  p.y = initial_y(Fz, csp.Frange);
  p.z = z0;
  p.u = u0;
  p.v = v0;
  Eigen::MatrixXd Cy = C_of_y(csp, p.y);
  p.S = build_S(Cy);
  Eigen::MatrixXd Ahat = Cy + p.S.transpose() - p.S;
  auto [Rhat, D] = modified_cholesky(Ahat, default_cholesky_delta(Ahat));
  (void)Rhat;
  p.R = Eigen::MatrixXd(D.cwiseSqrt().asDiagonal());
  res.point = p;
  return res;
}

}  // namespace boxcert
