#pragma once

// Exclusion-box workflows: find a certified sub-box, enlarge it under the
// certificate constraint, measure boxes, split the complement into at most
// 2n boxes, cut on an objective bound, and a worklist prune loop.

#include <Eigen/Dense>
#include <cstdio>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxcert/certificate.hpp"
#include "boxcert/model.hpp"
#include "boxcert/solver.hpp"
#include "boxcert/startpoint.hpp"

namespace boxcert {

struct ExclusionCertificate {
  Eigen::VectorXd u, v;  // the excluded box
  CertPoint witness;
  double fValue = 0.0;  // < 0
  TChoice tChoice;

  BoxVec box() const {
    BoxVec b;
    for (int i = 0; i < (int)u.size(); ++i) b.push_back(Interval(u(i), v(i)));
    return b;
  }
};

enum class BoxMeasure { NegL1, NegHalfL2Sq, NegLinf, PosL1, PosHalfL2Sq, PosLinf };

inline double box_measure(BoxMeasure kind, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v, const BoxVec& domain) {
  const int n = (int)u.size();
  Eigen::VectorXd w = v - u;
  switch (kind) {
    case BoxMeasure::NegL1:
      return -w.lpNorm<1>();
    case BoxMeasure::NegHalfL2Sq:
      return -0.5 * w.squaredNorm();
    case BoxMeasure::NegLinf:
      return -w.lpNorm<Eigen::Infinity>();
    default:
      break;
  }
  Eigen::VectorXd s(2 * n);
  for (int i = 0; i < n; ++i) {
    if (!is_finite(domain[i]))
      throw std::invalid_argument("box_measure: positive measures need a finite domain");
    s(i) = u(i) - domain[i].lo;
    s(n + i) = v(i) - domain[i].hi;
  }
  switch (kind) {
    case BoxMeasure::PosL1:
      return s.lpNorm<1>();
    case BoxMeasure::PosHalfL2Sq:
      return 0.5 * s.squaredNorm();
    default:
      return s.lpNorm<Eigen::Infinity>();
  }
}

// Subgradient of the measure in (u, v); at Linf kinks the argmax component.
inline void box_measure_subgradient(BoxMeasure kind, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v, const BoxVec& domain,
                                    Eigen::VectorXd& gu, Eigen::VectorXd& gv) {
  const int n = (int)u.size();
  gu = Eigen::VectorXd::Zero(n);
  gv = Eigen::VectorXd::Zero(n);
  auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
  switch (kind) {
    case BoxMeasure::NegL1:
      for (int i = 0; i < n; ++i) {
        gu(i) = sgn(v(i) - u(i));
        gv(i) = -sgn(v(i) - u(i));
      }
      return;
    case BoxMeasure::NegHalfL2Sq:
      gu = v - u;
      gv = -(v - u);
      return;
    case BoxMeasure::NegLinf: {
      int arg = 0;
      (v - u).cwiseAbs().maxCoeff(&arg);
      gu(arg) = sgn(v(arg) - u(arg));
      gv(arg) = -sgn(v(arg) - u(arg));
      return;
    }
    case BoxMeasure::PosL1:
      for (int i = 0; i < n; ++i) {
        gu(i) = sgn(u(i) - domain[i].lo);
        gv(i) = sgn(v(i) - domain[i].hi);
      }
      return;
    case BoxMeasure::PosHalfL2Sq:
      for (int i = 0; i < n; ++i) {
        gu(i) = u(i) - domain[i].lo;
        gv(i) = v(i) - domain[i].hi;
      }
      return;
    case BoxMeasure::PosLinf: {
      int arg = 0;
      double best = -1.0;
      for (int i = 0; i < n; ++i) {
        if (std::abs(u(i) - domain[i].lo) > best) { best = std::abs(u(i) - domain[i].lo); arg = i; }
        if (std::abs(v(i) - domain[i].hi) > best) { best = std::abs(v(i) - domain[i].hi); arg = n + i; }
      }
      if (arg < n)
        gu(arg) = sgn(u(arg) - domain[arg].lo);
      else
        gv(arg - n) = sgn(v(arg - n) - domain[arg - n].hi);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// find

struct FindOptions {
  SolveOptions solve;
  StartOptions start;
  bool optimizeW = false;
  bool zeroRS = false;            // drop the Cholesky-derived R, S
  bool earlyExitNegative = true;  // stop at the first f < 0
  bool rigorousVerify = false;
  // Exclusion is only declared when f clears this relative margin below zero;
  // a bare f < 0 would accept rounding noise on a true value of 0.
  double negativeMargin = 1e-9;
};

struct FindResult {
  enum class Kind { Excluded, FeasibleFound, Unknown };
  Kind kind = Kind::Unknown;
  std::optional<ExclusionCertificate> cert;
  Eigen::VectorXd feasiblePoint;
  SolveReport report;
};

namespace detail {

// Bounds keeping y out of the Y = -inf region: an infinite range endpoint
// forbids the matching sign of y_k.
inline Interval y_bound(const QuadraticCsp& csp, int k) {
  double lo = -kInf, hi = kInf;
  if (csp.Frange[k].lo == -kInf) hi = 0.0;
  if (csp.Frange[k].hi == kInf) lo = 0.0;
  return Interval(lo, hi);
}

}  // namespace detail

inline FindResult find_exclusion_box(const QuadraticCsp& csp, const BoxVec& region,
                                     const Eigen::VectorXd& r, const TChoice& choice,
                                     bool fixedBox, const FindOptions& opts = {}) {
  if (!subset(region, csp.domain))
    throw std::invalid_argument("find_exclusion_box: region not inside the domain");
  const int n = csp.n, m = csp.m;
  FindResult res;

  QuadraticCsp sub = csp;
  sub.domain = region;
  StartOptions sopts = opts.start;
  if (sopts.r.size() == 0) sopts.r = r.size() ? r : Eigen::VectorXd::Zero(n);
  StartResult start = starting_point(sub, sopts, choice);
  if (start.feasible) {
    res.kind = FindResult::Kind::FeasibleFound;
    res.feasiblePoint = start.feasiblePoint;
    return res;
  }
  CertPoint p0 = start.point;
  if (opts.zeroRS) {
    p0.R.setZero();
    p0.S.setZero();
  }

  Layout layout{m, n, OptMask{true, true, opts.optimizeW, !fixedBox, !fixedBox}};
  p0.optMask = layout.mask;

  LinearConstraints cons;
  cons.bounds.resize(layout.dim(), Interval::entire());
  for (int k = 0; k < m; ++k) cons.bounds[layout.offY() + k] = detail::y_bound(csp, k);
  if (fixedBox) {
    for (int i = 0; i < n; ++i)
      cons.bounds[layout.offZ() + i] = Interval(p0.u(i), p0.v(i));
  } else {
    Eigen::VectorXd rv = r.size() ? r : Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      cons.bounds[layout.offZ() + i] = region[i];
      cons.bounds[layout.offU() + i] = region[i];
      cons.bounds[layout.offV() + i] = region[i];
      // u_i + r_i <= v_i ; u_i <= z_i ; z_i <= v_i
      LinearConstraints::Row row;
      row.a = Eigen::VectorXd::Zero(layout.dim());
      row.a(layout.offU() + i) = 1.0;
      row.a(layout.offV() + i) = -1.0;
      row.rhs = -rv(i);
      cons.rows.push_back(row);
      row.a.setZero();
      row.a(layout.offU() + i) = 1.0;
      row.a(layout.offZ() + i) = -1.0;
      row.rhs = 0.0;
      cons.rows.push_back(row);
      row.a.setZero();
      row.a(layout.offZ() + i) = 1.0;
      row.a(layout.offV() + i) = -1.0;
      row.rhs = 0.0;
      cons.rows.push_back(row);
    }
  }

  const BoxVec fixedBoxVec = [&] {
    BoxVec b;
    for (int i = 0; i < n; ++i) b.push_back(Interval(p0.u(i), p0.v(i)));
    return b;
  }();

  bool feasibleHit = false;
  Eigen::VectorXd feasiblePoint;

  Oracle oracle;
  CertPoint work = p0;
  oracle.fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    layout.unpack(x, work);
    BoxVec box = fixedBox ? fixedBoxVec : [&] {
      BoxVec b;
      for (int i = 0; i < n; ++i)
        b.push_back(Interval(std::min(work.u(i), work.v(i)), std::max(work.u(i), work.v(i))));
      return b;
    }();
    if (!feasibleHit && is_feasible(csp, work.z)) {
      feasibleHit = true;
      feasiblePoint = work.z;
    }
    CertValue cv;
    CertGrad cg = f_subgradient(csp, work, box, choice, &cv, /*clampT=*/true);
    grad = layout.pack_grad(cg);
    return cv.f;
  };

  SolveOptions sv = opts.solve;
  {
    auto userExit = sv.earlyExit;
    bool wantNeg = opts.earlyExitNegative;
    sv.earlyExit = [&feasibleHit, userExit, wantNeg](double v) {
      if (feasibleHit) return true;
      if (wantNeg && v < 0.0) return true;
      return userExit ? userExit(v) : false;
    };
  }

  SolveReport rep = minimize(oracle, cons, layout.pack(p0), sv);
  res.report = rep;

  if (feasibleHit) {
    res.kind = FindResult::Kind::FeasibleFound;
    res.feasiblePoint = feasiblePoint;
    return res;
  }

  // Re-verify the best point with a fresh evaluation.  The solver can leave
  // u, v a rounding error outside the region; clamp so the certified box is
  // a true sub-box (shrinking cannot make an infeasible box feasible).
  CertPoint bestPoint = p0;
  layout.unpack(rep.best, bestPoint);
  if (!fixedBox) {
    for (int i = 0; i < n; ++i) {
      bestPoint.u(i) = std::min(std::max(bestPoint.u(i), region[i].lo), region[i].hi);
      bestPoint.v(i) = std::min(std::max(bestPoint.v(i), region[i].lo), region[i].hi);
    }
  }
  BoxVec bestBox = fixedBox ? fixedBoxVec : [&] {
    BoxVec b;
    for (int i = 0; i < n; ++i)
      b.push_back(Interval(std::min(bestPoint.u(i), bestPoint.v(i)),
                           std::max(bestPoint.u(i), bestPoint.v(i))));
    return b;
  }();
  CertValue verified;
  try {
    verified = f_value(csp, bestPoint, bestBox, choice, opts.rigorousVerify);
  } catch (const std::domain_error&) {
    res.kind = FindResult::Kind::Unknown;
    return res;
  }
  const double margin = opts.negativeMargin *
                        (1.0 + std::abs(verified.Z) + std::max(0.0, verified.Y)) / verified.T;
  if (verified.f < -margin) {
    ExclusionCertificate cert;
    cert.u = Eigen::VectorXd(n);
    cert.v = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
      cert.u(i) = bestBox[i].lo;
      cert.v(i) = bestBox[i].hi;
    }
    cert.witness = bestPoint;
    cert.fValue = verified.f;
    cert.tChoice = choice;
    res.kind = FindResult::Kind::Excluded;
    res.cert = cert;
  }
  return res;
}

// ---------------------------------------------------------------------------
// enlarge

struct EnlargeOptions {
  ConstrainedOptions solve;
  std::optional<BoxVec> region;  // enclosing region, defaults to csp.domain
};

inline ExclusionCertificate enlarge_exclusion_box(const QuadraticCsp& csp,
                                                  const ExclusionCertificate& cert,
                                                  double delta, BoxMeasure measure,
                                                  const EnlargeOptions& opts = {}) {
  if (!(delta < 0.0) || delta < cert.fValue)
    throw std::invalid_argument("enlarge: need delta in [cert.fValue, 0)");
  const int n = csp.n, m = csp.m;
  const BoxVec& region = opts.region ? *opts.region : csp.domain;
  const TChoice choice = cert.tChoice;

  Layout layout{m, n, OptMask{true, true, false, true, true}};
  CertPoint p0 = cert.witness;
  p0.u = cert.u;
  p0.v = cert.v;
  p0.optMask = layout.mask;

  LinearConstraints cons;
  cons.bounds.resize(layout.dim(), Interval::entire());
  for (int k = 0; k < m; ++k) cons.bounds[layout.offY() + k] = detail::y_bound(csp, k);
  for (int i = 0; i < n; ++i) {
    cons.bounds[layout.offZ() + i] = region[i];
    cons.bounds[layout.offU() + i] = Interval(region[i].lo, cert.u(i));
    cons.bounds[layout.offV() + i] = Interval(cert.v(i), region[i].hi);
    LinearConstraints::Row row;
    row.a = Eigen::VectorXd::Zero(layout.dim());
    row.a(layout.offU() + i) = 1.0;
    row.a(layout.offZ() + i) = -1.0;
    row.rhs = 0.0;
    cons.rows.push_back(row);
    row.a.setZero();
    row.a(layout.offZ() + i) = 1.0;
    row.a(layout.offV() + i) = -1.0;
    row.rhs = 0.0;
    cons.rows.push_back(row);
  }

  CertPoint workObj = p0, workCon = p0;
  Oracle obj;
  obj.fn = [&, measure](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    layout.unpack(x, workObj);
    Eigen::VectorXd gu, gv;
    box_measure_subgradient(measure, workObj.u, workObj.v, region, gu, gv);
    CertGrad g;
    g.y = Eigen::VectorXd::Zero(m);
    g.z = Eigen::VectorXd::Zero(n);
    g.R = Eigen::MatrixXd::Zero(n, n);
    g.S = Eigen::MatrixXd::Zero(n, n);
    g.u = gu;
    g.v = gv;
    grad = layout.pack_grad(g);
    return box_measure(measure, workObj.u, workObj.v, region);
  };
  Oracle con;
  con.fn = [&, delta](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    layout.unpack(x, workCon);
    BoxVec box;
    for (int i = 0; i < n; ++i)
      box.push_back(Interval(std::min(workCon.u(i), workCon.v(i)),
                             std::max(workCon.u(i), workCon.v(i))));
    CertValue cv;
    CertGrad cg = f_subgradient(csp, workCon, box, choice, &cv, /*clampT=*/true);
    grad = layout.pack_grad(cg);
    return cv.f - delta;
  };

  SolveReport rep = minimize_constrained(obj, con, cons, layout.pack(p0), opts.solve);
  if (rep.status == SolveStatus::Infeasible)
    throw std::logic_error("enlarge: infeasible start despite delta >= cert.fValue");

  CertPoint bestPoint = p0;
  layout.unpack(rep.best, bestPoint);
  for (int i = 0; i < n; ++i) {
    bestPoint.u(i) = std::min(std::max(bestPoint.u(i), region[i].lo), region[i].hi);
    bestPoint.v(i) = std::min(std::max(bestPoint.v(i), region[i].lo), region[i].hi);
  }
  ExclusionCertificate out;
  out.u = bestPoint.u;
  out.v = bestPoint.v;
  out.witness = bestPoint;
  out.tChoice = choice;
  BoxVec box;
  for (int i = 0; i < n; ++i) box.push_back(Interval(out.u(i), out.v(i)));
  out.fValue = f_value(csp, bestPoint, box, choice).f;
  return out;
}

// ---------------------------------------------------------------------------
// complement splitting

inline std::vector<BoxVec> split_complement(const BoxVec& outer, const BoxVec& inner) {
  if (!subset(inner, outer)) throw std::invalid_argument("split_complement: inner not inside outer");
  const int n = (int)outer.size();
  std::vector<BoxVec> pieces;
  BoxVec current = outer;
  for (int i = 0; i < n; ++i) {
    if (inner[i].lo > current[i].lo) {
      BoxVec slab = current;
      slab[i] = Interval(current[i].lo, inner[i].lo);
      pieces.push_back(slab);
    }
    if (inner[i].hi < current[i].hi) {
      BoxVec slab = current;
      slab[i] = Interval(inner[i].hi, current[i].hi);
      pieces.push_back(slab);
    }
    current[i] = inner[i];
  }
  return pieces;
}

// ---------------------------------------------------------------------------
// objective cut: exclusion boxes of the cut CSP cannot contain a global
// minimizer below the incumbent value.

inline QuadraticCsp objective_cut(const QuadraticCsp& csp, int objIndex, double fCur) {
  if (objIndex < 0 || objIndex >= csp.m) throw std::invalid_argument("objective_cut: bad index");
  QuadraticCsp out = csp;
  out.Frange[objIndex] = Interval(-kInf, fCur);
  std::swap(out.c[0], out.c[objIndex]);
  std::swap(out.C[0], out.C[objIndex]);
  std::swap(out.Frange[0], out.Frange[objIndex]);
  return out;
}

inline QuadraticCsp objective_cut(const QuadraticCsp& csp, const Eigen::VectorXd& cObj,
                                  const Eigen::MatrixXd& CObj, double fCur) {
  QuadraticCsp out = csp;
  out.m += 1;
  out.c.insert(out.c.begin(), cObj);
  out.C.insert(out.C.begin(), CObj);
  out.Frange.insert(out.Frange.begin(), Interval(-kInf, fCur));
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// prune loop

struct PruneBudget {
  int maxBoxes = 50;
  int maxIterPerBox = 100;
};

struct PruneOptions {
  double rFraction = 0.25;  // minimum excluded width as a fraction of the box
  bool enlarge = false;
  BoxMeasure enlargeMeasure = BoxMeasure::PosL1;
};

struct PruneRow {
  int boxId = 0;
  int parentId = -1;
  BoxVec box;
  std::string status;  // excluded | feasible | unknown
  double fValue = 0.0;
  int iterations = 0;
  long nCalls = 0;
  double cost = 0.0;
  double wallMillis = 0.0;
};

struct PruneResult {
  std::vector<ExclusionCertificate> excluded;
  std::vector<BoxVec> remaining;
  std::vector<Eigen::VectorXd> feasiblePoints;
  std::vector<PruneRow> rows;
};

inline PruneResult prune(const QuadraticCsp& csp, const PruneBudget& budget,
                         const TChoice& choice, const PruneOptions& opts = {}) {
  PruneResult res;
  std::deque<std::pair<int, BoxVec>> work;  // (parentId, box)
  work.push_back({-1, csp.domain});
  int nextId = 0;

  auto bisect = [&](const BoxVec& box, int parent) {
    int widest = 0;
    double w = -1.0;
    for (int i = 0; i < (int)box.size(); ++i)
      if (width(box[i]) > w) {
        w = width(box[i]);
        widest = i;
      }
    double mid = 0.5 * (box[widest].lo + box[widest].hi);
    BoxVec a = box, b = box;
    a[widest] = Interval(box[widest].lo, mid);
    b[widest] = Interval(mid, box[widest].hi);
    work.push_back({parent, a});
    work.push_back({parent, b});
  };

  int processed = 0;
  while (!work.empty() && processed < budget.maxBoxes) {
    auto [parent, box] = work.front();
    work.pop_front();
    ++processed;
    const int id = nextId++;

    PruneRow row;
    row.boxId = id;
    row.parentId = parent;
    row.box = box;

    FindOptions fopts;
    fopts.solve.maxIter = budget.maxIterPerBox;
    Eigen::VectorXd r0 = Eigen::VectorXd::Zero(csp.n);

    // Whole-box certificate first, then a variable sub-box.
    FindResult fixed = find_exclusion_box(csp, box, r0, choice, /*fixedBox=*/true, fopts);
    auto account = [&](const SolveReport& rep) {
      row.iterations += rep.iterations;
      row.nCalls += rep.counters.nCalls;
      row.cost += rep.cost;
    };
    account(fixed.report);

    if (fixed.kind == FindResult::Kind::FeasibleFound) {
      res.feasiblePoints.push_back(fixed.feasiblePoint);
      row.status = "feasible";
      bisect(box, id);
    } else if (fixed.kind == FindResult::Kind::Excluded) {
      res.excluded.push_back(*fixed.cert);
      row.status = "excluded";
      row.fValue = fixed.cert->fValue;
    } else {
      Eigen::VectorXd r(csp.n);
      for (int i = 0; i < csp.n; ++i) r(i) = opts.rFraction * width(box[i]);
      FindResult var = find_exclusion_box(csp, box, r, choice, /*fixedBox=*/false, fopts);
      account(var.report);
      if (var.kind == FindResult::Kind::FeasibleFound) {
        res.feasiblePoints.push_back(var.feasiblePoint);
        row.status = "feasible";
        bisect(box, id);
      } else if (var.kind == FindResult::Kind::Excluded) {
        ExclusionCertificate cert = *var.cert;
        if (opts.enlarge && cert.fValue < 0.0) {
          EnlargeOptions eopts;
          eopts.region = box;
          try {
            cert = enlarge_exclusion_box(csp, cert, 0.5 * cert.fValue, opts.enlargeMeasure, eopts);
          } catch (const std::exception&) {
            // keep the unenlarged certificate
          }
        }
        res.excluded.push_back(cert);
        row.status = "excluded";
        row.fValue = cert.fValue;
        for (const BoxVec& piece : split_complement(box, cert.box()))
          work.push_back({id, piece});
      } else {
        row.status = "unknown";
        row.fValue = var.report.bestValue;
        bisect(box, id);
      }
    }
    res.rows.push_back(row);
  }

  for (auto& [parent, box] : work) res.remaining.push_back(box);
  return res;
}

// ---------------------------------------------------------------------------
// CSV report

inline std::string emit_report(const std::vector<PruneRow>& rows, int n) {
  std::string out = "boxId,parentId";
  for (int i = 1; i <= n; ++i) out += ",lo" + std::to_string(i);
  for (int i = 1; i <= n; ++i) out += ",hi" + std::to_string(i);
  out += ",status,fValue,iterations,nCalls,cost,wallMillis\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  for (const PruneRow& r : rows) {
    out += std::to_string(r.boxId) + "," + std::to_string(r.parentId);
    for (int i = 0; i < n; ++i) out += "," + num(r.box[i].lo);
    for (int i = 0; i < n; ++i) out += "," + num(r.box[i].hi);
    out += "," + r.status + "," + num(r.fValue) + "," + std::to_string(r.iterations) +
           "," + std::to_string(r.nCalls) + "," + num(r.cost) + "," + num(r.wallMillis) + "\n";
  }
  return out;
}

}  // namespace boxcert
