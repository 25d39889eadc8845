#pragma once

// The infeasibility certificate f = (Z - max(0, Y)) / T for quadratic CSPs.
//
// Z is the sup of the interval evaluation of
//   (c(y,z)^T + (x - z)^T A(y,R,S)) (x - z)       over the box x,
// with C(y) = sum_k C_k y_k, c(y,z) = sum_k c_k y_k + (C(y)+C(y)^T) z and
// A(y,R,S) = C(y) + R^T R + S^T - S.  Y is the closed form of
// inf y^T (F - F(z)).  A strictly negative f proves the box infeasible.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "boxcert/interval.hpp"
#include "boxcert/model.hpp"

namespace boxcert {

struct TChoice {
  enum class Variant { One, NormY };
  Variant variant = Variant::NormY;
  double epsilonZero = 1e-12;  // guard for the |y| = 0 zero set
};

struct OptMask {
  bool y = true;
  bool z = true;
  bool w = false;  // (R, S)
  bool u = false;
  bool v = false;
};

struct CertPoint {
  Eigen::VectorXd y;  // length m
  Eigen::VectorXd z;  // length n
  Eigen::MatrixXd R;  // upper triangular n x n
  Eigen::MatrixXd S;  // strictly upper triangular n x n
  Eigen::VectorXd u;  // length n
  Eigen::VectorXd v;  // length n
  OptMask optMask;

  static CertPoint zeros(int m, int n) {
    CertPoint p;
    p.y = Eigen::VectorXd::Zero(m);
    p.z = Eigen::VectorXd::Zero(n);
    p.R = Eigen::MatrixXd::Zero(n, n);
    p.S = Eigen::MatrixXd::Zero(n, n);
    p.u = Eigen::VectorXd::Zero(n);
    p.v = Eigen::VectorXd::Zero(n);
    return p;
  }
};

struct CertValue {
  double f = 0.0;
  double Z = 0.0;
  double Y = 0.0;  // may be -inf
  double T = 1.0;
};

// Gradient over all blocks; structurally-zero entries of R and S are unused.
struct CertGrad {
  Eigen::VectorXd y, z, u, v;
  Eigen::MatrixXd R, S;
};

inline Eigen::MatrixXd C_of_y(const QuadraticCsp& csp, const Eigen::VectorXd& y) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(csp.n, csp.n);
  for (int k = 0; k < csp.m; ++k) C += csp.C[k] * y(k);
  return C;
}

inline Eigen::VectorXd c_of_yz(const QuadraticCsp& csp, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& z) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(csp.n);
  for (int k = 0; k < csp.m; ++k) c += csp.c[k] * y(k);
  Eigen::MatrixXd Cy = C_of_y(csp, y);
  return c + (Cy + Cy.transpose()) * z;
}

inline Eigen::MatrixXd A_of(const QuadraticCsp& csp, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& R, const Eigen::MatrixXd& S) {
  return C_of_y(csp, y) + R.transpose() * R + S.transpose() - S;
}

// Y(y,z) = sum_k y_k (Flo_k - F_k(z)) for y_k >= 0, y_k (Fhi_k - F_k(z)) for
// y_k < 0; -inf when an infinite bound pairs with a nonzero y of matching sign.
inline double Y_value(const QuadraticCsp& csp, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& z) {
  Eigen::VectorXd Fz = eval_F(csp, z);
  double total = 0.0;
  for (int k = 0; k < csp.m; ++k) {
    if (y(k) == 0.0) continue;
    double bound = y(k) > 0.0 ? csp.Frange[k].lo : csp.Frange[k].hi;
    if (!std::isfinite(bound)) return -kInf;
    total += y(k) * (bound - Fz(k));
  }
  return total;
}

inline double T_value(const TChoice& choice, const CertPoint& p) {
  if (choice.variant == TChoice::Variant::One) return 1.0;
  double t = p.y.norm();
  if (t < choice.epsilonZero) throw std::domain_error("denominator zero set");
  return t;
}

namespace detail {

// Z with the endpoint selections achieving the sup recorded for the
// subgradient.  The interval expression is evaluated row by row exactly as
// written: t_i = (c_i + sum_j d_j A_ji) * d_i, Z = sup sum_i t_i, with
// d_j = [u_j, v_j] - z_j.
struct ZEval {
  double Z = 0.0;
  // Frozen selections (only meaningful when gradients are requested):
  // gSide[i]: sup of t_i used the lo (false) or hi (true) endpoint of the
  // inner interval; dSide[i]: lo/hi endpoint of d_i.
  std::vector<bool> gSide, dSide;
  Eigen::VectorXd gVal, dVal;  // the selected endpoint values
};

inline ZEval z_eval(const QuadraticCsp& csp, const CertPoint& p, const BoxVec& box,
                    bool rigorous, bool record) {
  const int n = csp.n;
  Eigen::VectorXd cvec = c_of_yz(csp, p.y, p.z);
  Eigen::MatrixXd A = A_of(csp, p.y, p.R, p.S);

  std::vector<Interval> d(n);
  for (int j = 0; j < n; ++j)
    d[j] = sub(Interval(box[j].lo, box[j].hi), Interval::point(p.z(j)), rigorous);

  ZEval out;
  if (record) {
    out.gSide.assign(n, false);
    out.dSide.assign(n, false);
    out.gVal = Eigen::VectorXd::Zero(n);
    out.dVal = Eigen::VectorXd::Zero(n);
  }

  double Z = 0.0;
  for (int i = 0; i < n; ++i) {
    Interval g = Interval::point(cvec(i));
    for (int j = 0; j < n; ++j) g = add(g, scale(d[j], A(j, i), rigorous), rigorous);
    Interval t = mul(g, d[i], rigorous);
    Z += sup(t);
    if (record) {
      // Which of the four endpoint products achieves the sup.
      double best = -kInf;
      bool gs = false, ds = false;
      const double ge[2] = {g.lo, g.hi};
      const double de[2] = {d[i].lo, d[i].hi};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (ge[a] * de[b] > best) {
            best = ge[a] * de[b];
            gs = a;
            ds = b;
          }
      out.gSide[i] = gs;
      out.dSide[i] = ds;
      out.gVal(i) = gs ? g.hi : g.lo;
      out.dVal(i) = ds ? d[i].hi : d[i].lo;
    }
  }
  out.Z = Z;
  return out;
}

}  // namespace detail

inline double Z_value(const QuadraticCsp& csp, const CertPoint& p, const BoxVec& box,
                      bool rigorous = false) {
  return detail::z_eval(csp, p, box, rigorous, false).Z;
}

inline CertValue f_value(const QuadraticCsp& csp, const CertPoint& p, const BoxVec& box,
                         const TChoice& choice, bool rigorous = false) {
  CertValue cv;
  cv.Z = Z_value(csp, p, box, rigorous);
  cv.Y = Y_value(csp, p.y, p.z);
  cv.T = T_value(choice, p);
  if (cv.Y == -kInf) {
    cv.f = kInf;  // useless for certification, never negative
    return cv;
  }
  cv.f = (cv.Z - std::max(0.0, cv.Y)) / cv.T;
  return cv;
}

// A Clarke subgradient element of f, obtained by freezing the selections the
// evaluation itself realized: the sup-achieving endpoints inside Z, the active
// branch of max(0, Y) and the sign branches of the Y formula.  At smooth
// points this is the classical gradient.
//
// clampT substitutes T = epsilonZero near the NormY zero set instead of
// throwing; the solver oracle uses that fallback.
inline CertGrad f_subgradient(const QuadraticCsp& csp, const CertPoint& p, const BoxVec& box,
                              const TChoice& choice, CertValue* valueOut = nullptr,
                              bool clampT = false) {
  const int n = csp.n, m = csp.m;
  detail::ZEval ze = detail::z_eval(csp, p, box, false, true);
  Eigen::MatrixXd A = A_of(csp, p.y, p.R, p.S);
  Eigen::MatrixXd Cy = C_of_y(csp, p.y);
  Eigen::MatrixXd Csym = Cy + Cy.transpose();
  Eigen::VectorXd Fz = eval_F(csp, p.z);

  // Gradients of Z.
  CertGrad gZ;
  gZ.y = Eigen::VectorXd::Zero(m);
  gZ.z = Eigen::VectorXd::Zero(n);
  gZ.u = Eigen::VectorXd::Zero(n);
  gZ.v = Eigen::VectorXd::Zero(n);
  gZ.R = Eigen::MatrixXd::Zero(n, n);
  gZ.S = Eigen::MatrixXd::Zero(n, n);

  // d_j endpoint selected inside g_i depends on the g side and sign of A(j,i).
  auto inner_side = [&](int i, int j) -> bool {
    bool hiSide = ze.gSide[i];
    return (A(j, i) >= 0.0) == hiSide;  // true -> v endpoint of d_j
  };
  auto add_d = [&](int j, bool hiSide, double w) {
    // d_j = (u_j or v_j) - z_j
    gZ.z(j) -= w;
    if (hiSide)
      gZ.v(j) += w;
    else
      gZ.u(j) += w;
  };

  for (int i = 0; i < n; ++i) {
    const double G = ze.gVal(i), D = ze.dVal(i);
    // Z_i = G * D with G = c_i + sum_j dsel_ij A(j,i), D = dsel_i.
    add_d(i, ze.dSide[i], G);
    // through c_i(y, z)
    for (int k = 0; k < m; ++k)
      gZ.y(k) += D * (csp.c[k](i) + ((csp.C[k] + csp.C[k].transpose()) * p.z)(i));
    gZ.z += D * Csym.row(i).transpose();
    for (int j = 0; j < n; ++j) {
      const bool hiSide = inner_side(i, j);
      const double dsel = (hiSide ? box[j].hi : box[j].lo) - p.z(j);
      add_d(j, hiSide, D * A(j, i));
      // through A(j,i) = C(y)_ji + (R^T R)_ji + S_ij - S_ji
      const double w = D * dsel;
      for (int k = 0; k < m; ++k) gZ.y(k) += w * csp.C[k](j, i);
      for (int pr = 0; pr < n; ++pr) {
        gZ.R(pr, j) += w * p.R(pr, i);
        gZ.R(pr, i) += w * p.R(pr, j);
      }
      if (i < j) gZ.S(i, j) += w;
      if (j < i) gZ.S(j, i) -= w;
    }
  }

  // Y and its active branch.
  double Y = Y_value(csp, p.y, p.z);
  Eigen::VectorXd gYy = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd gYz = Eigen::VectorXd::Zero(n);
  bool yActive = std::isfinite(Y) && Y > 0.0;
  if (yActive) {
    for (int k = 0; k < m; ++k) {
      double bound = p.y(k) >= 0.0 ? csp.Frange[k].lo : csp.Frange[k].hi;
      if (!std::isfinite(bound)) {
        // Only reachable at y_k = 0; select the branch with a finite bound.
        bound = p.y(k) >= 0.0 ? csp.Frange[k].hi : csp.Frange[k].lo;
        if (!std::isfinite(bound)) bound = Fz(k);  // vacuous constraint
      }
      gYy(k) = bound - Fz(k);
      Eigen::VectorXd gradFk = csp.c[k] + (csp.C[k] + csp.C[k].transpose()) * p.z;
      gYz -= p.y(k) * gradFk;
    }
  }

  double T = 1.0;
  Eigen::VectorXd gTy = Eigen::VectorXd::Zero(m);
  if (choice.variant == TChoice::Variant::NormY) {
    T = p.y.norm();
    if (T < choice.epsilonZero) {
      if (!clampT) throw std::domain_error("denominator zero set");
      T = choice.epsilonZero;  // gTy stays 0
    } else {
      gTy = p.y / T;
    }
  }

  const double M = std::isfinite(Y) ? std::max(0.0, Y) : 0.0;
  const double f = (ze.Z - M) / T;
  if (valueOut) {
    valueOut->Z = ze.Z;
    valueOut->Y = Y;
    valueOut->T = T;
    valueOut->f = (Y == -kInf) ? kInf : f;
  }

  CertGrad g;
  g.y = (gZ.y - (yActive ? gYy : Eigen::VectorXd::Zero(m).eval())) / T - (f / T) * gTy;
  g.z = (gZ.z - (yActive ? gYz : Eigen::VectorXd::Zero(n).eval())) / T;
  g.u = gZ.u / T;
  g.v = gZ.v / T;
  g.R = gZ.R / T;
  g.S = gZ.S / T;
  return g;
}

// ---------------------------------------------------------------------------
// Packing of the active variable blocks into a flat solver vector.
// Order: y, z, w = (R rowwise upper, S rowwise strictly upper), u, v.

struct Layout {
  int m = 0, n = 0;
  OptMask mask;

  int n1() const { return n * (n + 1) / 2; }
  int n0() const { return (n - 1) * n / 2; }
  int dim() const {
    int d = 0;
    if (mask.y) d += m;
    if (mask.z) d += n;
    if (mask.w) d += n1() + n0();
    if (mask.u) d += n;
    if (mask.v) d += n;
    return d;
  }

  Eigen::VectorXd pack(const CertPoint& p) const {
    Eigen::VectorXd x(dim());
    int at = 0;
    if (mask.y) { x.segment(at, m) = p.y; at += m; }
    if (mask.z) { x.segment(at, n) = p.z; at += n; }
    if (mask.w) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) x(at++) = p.R(i, j);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) x(at++) = p.S(i, j);
    }
    if (mask.u) { x.segment(at, n) = p.u; at += n; }
    if (mask.v) { x.segment(at, n) = p.v; at += n; }
    return x;
  }

  void unpack(const Eigen::VectorXd& x, CertPoint& p) const {
    int at = 0;
    if (mask.y) { p.y = x.segment(at, m); at += m; }
    if (mask.z) { p.z = x.segment(at, n); at += n; }
    if (mask.w) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) p.R(i, j) = x(at++);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) p.S(i, j) = x(at++);
    }
    if (mask.u) { p.u = x.segment(at, n); at += n; }
    if (mask.v) { p.v = x.segment(at, n); at += n; }
  }

  Eigen::VectorXd pack_grad(const CertGrad& g) const {
    Eigen::VectorXd x(dim());
    int at = 0;
    if (mask.y) { x.segment(at, m) = g.y; at += m; }
    if (mask.z) { x.segment(at, n) = g.z; at += n; }
    if (mask.w) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) x(at++) = g.R(i, j);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) x(at++) = g.S(i, j);
    }
    if (mask.u) { x.segment(at, n) = g.u; at += n; }
    if (mask.v) { x.segment(at, n) = g.v; at += n; }
    return x;
  }

  // Offsets of the individual blocks, -1 when inactive.
  int offY() const { return mask.y ? 0 : -1; }
  int offZ() const { return mask.z ? (mask.y ? m : 0) : -1; }
  int offU() const {
    if (!mask.u) return -1;
    int at = 0;
    if (mask.y) at += m;
    if (mask.z) at += n;
    if (mask.w) at += n1() + n0();
    return at;
  }
  int offV() const { return mask.v ? offU() + n : -1; }
};

}  // namespace boxcert
