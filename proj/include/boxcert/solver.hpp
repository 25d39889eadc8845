#pragma once

// Proximal bundle method for locally Lipschitz objectives under bound/linear
// constraints, with an early-exit hook, plus an exact-penalty wrapper for one
// nonsmooth nonlinear constraint that only accepts feasible incumbents.
// Evaluation counters follow the credit-point cost model.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "boxcert/interval.hpp"
#include "boxcert/qp.hpp"

namespace boxcert {

struct EvalCounters {
  long nCalls = 0;            // joint value+subgradient calls, objective
  long nConstraintCalls = 0;  // same for the nonsmooth constraint
  int dimension = 0;
  int nlc = 0;  // 1 when a nonsmooth nonlinear constraint is present
};

// One call returns value and subgradient together (cost weight 1+3).
struct Oracle {
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> fn;
  EvalCounters counters;

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    ++counters.nCalls;
    return fn(x, grad);
  }
};

inline double cost(const EvalCounters& c) { return (1 + c.nlc) * (double)c.nCalls * 4.0; }

// The bundle-Newton accounting (value + subgradient + Hessian substitute).
inline double bundle_newton_cost(long na, int N, int nlc) {
  return (1 + nlc) * (double)na * (1.0 + 3.0 + 3.0 * N);
}

inline double rp_cost(const EvalCounters& a, const EvalCounters& b) {
  return cost(b) - cost(a);
}

struct LinearConstraints {
  std::vector<Interval> bounds;  // per variable, +-inf allowed; empty = free
  struct Row {
    Eigen::VectorXd a;
    double rhs;  // a.x <= rhs
  };
  std::vector<Row> rows;

  bool satisfied(const Eigen::VectorXd& x, double tol = 1e-9) const {
    for (size_t i = 0; i < bounds.size(); ++i)
      if (x((int)i) < bounds[i].lo - tol || x((int)i) > bounds[i].hi + tol) return false;
    for (const Row& r : rows)
      if (r.a.dot(x) > r.rhs + tol) return false;
    return true;
  }
};

enum class SolveStatus { EarlyExit, Stationary, IterLimit, Infeasible };

struct SolveOptions {
  int maxIter = 100;
  double tol = 1e-5;
  std::function<bool(double)> earlyExit;  // predicate on the best value
  double proxT0 = 1.0;
  int bundleMax = 30;
};

struct SolveReport {
  SolveStatus status = SolveStatus::IterLimit;
  Eigen::VectorXd best;
  double bestValue = std::numeric_limits<double>::infinity();
  int iterations = 0;
  EvalCounters counters;
  double cost = 0.0;
};

namespace detail {

struct Plane {
  Eigen::VectorXd x;
  double f;
  Eigen::VectorXd g;
};

}  // namespace detail

inline SolveReport minimize(Oracle& oracle, const LinearConstraints& cons,
                            const Eigen::VectorXd& x0, const SolveOptions& opts) {
  const int nv = (int)x0.size();
  SolveReport rep;

  Eigen::VectorXd xc = x0;
  // Clamp to bounds; reject if the rows cannot be met at the clamped point.
  for (size_t i = 0; i < cons.bounds.size(); ++i)
    xc((int)i) = std::min(std::max(xc((int)i), cons.bounds[i].lo), cons.bounds[i].hi);
  if (!cons.satisfied(xc)) {
    rep.status = SolveStatus::Infeasible;
    rep.counters = oracle.counters;
    rep.cost = cost(rep.counters);
    return rep;
  }

  Eigen::VectorXd g0(nv);
  double fc = oracle.eval(xc, g0);
  rep.best = xc;
  rep.bestValue = fc;
  auto finish = [&](SolveStatus st) {
    rep.status = st;
    rep.counters = oracle.counters;
    rep.counters.dimension = nv;
    rep.cost = cost(rep.counters);
    return rep;
  };
  if (opts.earlyExit && opts.earlyExit(rep.bestValue)) return finish(SolveStatus::EarlyExit);
  if (opts.maxIter <= 0) return finish(SolveStatus::IterLimit);

  std::vector<detail::Plane> bundle;
  bundle.push_back({xc, fc, g0});
  double t = opts.proxT0;
  int nullSteps = 0;

  for (int it = 0; it < opts.maxIter; ++it) {
    rep.iterations = it + 1;
    const int nb = (int)bundle.size();

    // Linearization errors at the center, downshifted for nonconvexity.
    Eigen::VectorXd e(nb);
    for (int i = 0; i < nb; ++i) {
      double err = fc - (bundle[i].f + bundle[i].g.dot(xc - bundle[i].x));
      double dist2 = (xc - bundle[i].x).squaredNorm();
      e(i) = std::max(std::max(err, 0.0), 1e-10 * dist2);
    }

    // Inner QP over (d, xi): min xi + 1/(2t) |d|^2
    //   s.t. g_i.d - xi <= e_i, rows, bounds (shifted to the center).
    std::vector<Eigen::VectorXd> grow;
    std::vector<double> brow;
    for (int i = 0; i < nb; ++i) {
      Eigen::VectorXd r(nv + 1);
      r.head(nv) = bundle[i].g;
      r(nv) = -1.0;
      grow.push_back(r);
      brow.push_back(e(i));
    }
    const int nPlanes = nb;
    for (const auto& row : cons.rows) {
      Eigen::VectorXd r(nv + 1);
      r.head(nv) = row.a;
      r(nv) = 0.0;
      grow.push_back(r);
      brow.push_back(row.rhs - row.a.dot(xc));
    }
    for (size_t i = 0; i < cons.bounds.size(); ++i) {
      if (std::isfinite(cons.bounds[i].hi)) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nv + 1);
        r((int)i) = 1.0;
        grow.push_back(r);
        brow.push_back(cons.bounds[i].hi - xc((int)i));
      }
      if (std::isfinite(cons.bounds[i].lo)) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nv + 1);
        r((int)i) = -1.0;
        grow.push_back(r);
        brow.push_back(xc((int)i) - cons.bounds[i].lo);
      }
    }
    const int nrows = (int)grow.size();
    Eigen::MatrixXd G(nrows, nv + 1);
    Eigen::VectorXd bq(nrows);
    for (int r = 0; r < nrows; ++r) {
      G.row(r) = grow[r].transpose();
      bq(r) = brow[r];
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv + 1, nv + 1);
    H.topLeftCorner(nv, nv) = (1.0 / t) * Eigen::MatrixXd::Identity(nv, nv);
    H(nv, nv) = 1e-9;  // xi regularization, keeps H definite
    Eigen::VectorXd q = Eigen::VectorXd::Zero(nv + 1);
    q(nv) = 1.0;
    Eigen::VectorXd xq0 = Eigen::VectorXd::Zero(nv + 1);
    double xi0 = 0.0;
    for (int i = 0; i < nb; ++i) xi0 = std::max(xi0, -e(i));
    xq0(nv) = xi0;

    QpResult qp = solve_qp(H, q, G, bq, xq0);
    Eigen::VectorXd d = qp.x.head(nv);
    double xi = qp.x(nv);

    // Stationarity: prox-step length plus aggregate linearization error.
    double epsHat = 0.0;
    for (int i = 0; i < nPlanes; ++i) epsHat += qp.multipliers(i) * e(i);
    double meas = d.norm() / t + epsHat;
    if (meas <= opts.tol) return finish(SolveStatus::Stationary);

    double pred = -xi - 0.5 / t * d.squaredNorm();
    Eigen::VectorXd cand = xc + d;
    Eigen::VectorXd gcand(nv);
    double fcand = oracle.eval(cand, gcand);
    if (fcand < rep.bestValue) {
      rep.best = cand;
      rep.bestValue = fcand;
    }
    if (opts.earlyExit && opts.earlyExit(rep.bestValue)) return finish(SolveStatus::EarlyExit);

    if (pred > 0 && fcand <= fc - 0.1 * pred) {
      xc = cand;
      fc = fcand;
      t = std::min(t * 1.5, 1e6);
      nullSteps = 0;
    } else {
      ++nullSteps;
      if (nullSteps % 5 == 0) t = std::max(t * 0.5, 1e-9);
    }

    bundle.push_back({cand, fcand, gcand});
    if ((int)bundle.size() > opts.bundleMax) {
      // Drop the plane with the smallest multiplier (keep the newest).
      int drop = 0;
      double least = std::numeric_limits<double>::infinity();
      for (int i = 0; i < nPlanes; ++i)
        if (qp.multipliers(i) < least) {
          least = qp.multipliers(i);
          drop = i;
        }
      bundle.erase(bundle.begin() + drop);
    }
  }
  return finish(SolveStatus::IterLimit);
}

struct ConstrainedOptions {
  double penalty0 = 10.0;
  double penaltyGrowth = 10.0;
  int maxRounds = 3;
  SolveOptions inner;
  double feasTol = 1e-9;
};

// Exact l1 penalty for obj + penalty*max(0, con) with a feasible-incumbent
// filter: the reported best point always satisfies con <= 0.
inline SolveReport minimize_constrained(Oracle& objOracle, Oracle& conOracle,
                                        const LinearConstraints& cons,
                                        const Eigen::VectorXd& x0,
                                        const ConstrainedOptions& opts) {
  const int nv = (int)x0.size();
  objOracle.counters.nlc = 1;
  objOracle.counters.dimension = nv;

  SolveReport rep;
  Eigen::VectorXd g(nv);
  double con0 = conOracle.fn(x0, g);  // screening only, not an oracle call
  if (con0 > opts.feasTol || !cons.satisfied(x0)) {
    rep.status = SolveStatus::Infeasible;
    return rep;
  }

  Eigen::VectorXd og(nv);
  double bestObj = objOracle.fn(x0, og);
  Eigen::VectorXd bestX = x0;

  double rho = opts.penalty0;
  SolveStatus last = SolveStatus::IterLimit;
  int iters = 0;
  for (int round = 0; round < opts.maxRounds; ++round) {
    Oracle penalized;
    penalized.fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      Eigen::VectorXd go(nv), gc(nv);
      ++objOracle.counters.nCalls;
      double fo = objOracle.fn(x, go);
      ++objOracle.counters.nConstraintCalls;
      ++conOracle.counters.nCalls;
      double fcn = conOracle.fn(x, gc);
      if (fcn <= opts.feasTol && fo < bestObj) {
        bestObj = fo;
        bestX = x;
      }
      grad = go;
      double val = fo;
      if (fcn > 0.0) {
        val += rho * fcn;
        grad += rho * gc;
      }
      return val;
    };
    SolveReport inner = minimize(penalized, cons, bestX, opts.inner);
    last = inner.status;
    iters += inner.iterations;
    if (inner.status == SolveStatus::Infeasible) break;
    Eigen::VectorXd gc(nv);
    double conFinal = conOracle.fn(inner.best, gc);
    if (conFinal <= opts.feasTol) break;  // penalty was exact enough
    rho *= opts.penaltyGrowth;
  }

  rep.status = last;
  rep.best = bestX;
  rep.bestValue = bestObj;
  rep.iterations = iters;
  rep.counters = objOracle.counters;
  rep.cost = cost(rep.counters);
  return rep;
}

}  // namespace boxcert
