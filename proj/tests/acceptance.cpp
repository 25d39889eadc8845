// Acceptance checks, one pass/fail line each.  Exit code 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <random>

#include "boxcert/exclusion.hpp"
#include "../tests/test_util.hpp"

using namespace boxcert;

namespace {

int failures = 0;

void report(int id, bool ok, const char* what) {
  std::printf("criterion %2d: %s - %s\n", id, ok ? "pass" : "FAIL", what);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. 1-D infeasible example: fixed box, (y,z) only, R=S=0, T=|y|, f* = -1/2.
void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  FindOptions opts;
  opts.zeroRS = true;
  opts.earlyExitNegative = false;
  opts.solve.maxIter = 500;
  opts.solve.tol = 1e-9;
  FindResult res = find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(1),
                                      TChoice{TChoice::Variant::NormY}, /*fixedBox=*/true, opts);
  bool ok = res.kind == FindResult::Kind::Excluded &&
            std::abs(res.cert->fValue - (-0.5)) <= 1e-6 && seconds_since(t0) < 1.0;
  report(1, ok, "1-D infeasible example: f* = -0.5 within 1e-6, box declared infeasible");
}

// 2. 1-D feasible range: FeasibleFound, no negative certificate.
void criterion2() {
  auto t0 = std::chrono::steady_clock::now();
  QuadraticCsp csp = testutil::csp1d(Interval(-2, 1));
  FindResult res = find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(1),
                                      TChoice{TChoice::Variant::NormY}, true);
  bool ok = res.kind == FindResult::Kind::FeasibleFound && !res.cert.has_value() &&
            is_feasible(csp, res.feasiblePoint) && seconds_since(t0) < 1.0;
  report(2, ok, "1-D feasible example: FeasibleFound, no negative certificate");
}

// 3. Soundness over 200 seeded random CSPs: certified boxes contain no
//    feasible grid point (10^4-point grid).
void criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(20240601);
  bool ok = true;
  int certified = 0;
  for (int trial = 0; trial < 200; ++trial) {
    QuadraticCsp csp = testutil::random_csp(rng);
    FindOptions opts;
    opts.solve.maxIter = 60;
    FindResult res = find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(csp.n),
                                        TChoice{TChoice::Variant::One}, true, opts);
    if (res.kind == FindResult::Kind::Excluded) {
      ++certified;
      if (testutil::grid_has_feasible_point(csp, res.cert->box(), 10000)) ok = false;
    }
  }
  ok = ok && certified > 0 && seconds_since(t0) < 60.0;
  report(3, ok, "soundness: 200 random CSPs, no feasible grid point in any certified box");
}

// 4. Inclusion property of Z over 1000 random samples.
void criterion4() {
  std::mt19937 rng(444);
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    QuadraticCsp csp = testutil::random_csp(rng);
    CertPoint p = testutil::random_cert_point(csp, rng);
    double Z = Z_value(csp, p, csp.domain);
    Eigen::VectorXd Fz = eval_F(csp, p.z);
    Eigen::VectorXd x = testutil::random_point_in(csp.domain, rng);
    double v = p.y.dot(eval_F(csp, x) - Fz);
    double scale = 1 + std::abs(Z) + std::abs(v);
    if (Z < v - 1e-9 * scale) ok = false;
    if (Z < -1e-12 * scale) ok = false;  // z is inside the box
  }
  report(4, ok, "inclusion: Z >= y^T(F(x)-F(z)) and Z >= 0 with z in the box, 1000 samples");
}

// 5. Partial homogeneity of f with T = |y|.
void criterion5() {
  std::mt19937 rng(555);
  TChoice normy{TChoice::Variant::NormY};
  const double kappas[] = {1e-3, 1e-1, 10.0, 1e3};
  bool ok = true;
  int done = 0;
  while (done < 200) {
    QuadraticCsp csp = testutil::random_csp(rng);
    CertPoint p = testutil::random_cert_point(csp, rng);
    if (p.y.norm() < 1e-3) continue;
    double f0 = f_value(csp, p, csp.domain, normy).f;
    if (!std::isfinite(f0)) continue;
    for (double k : kappas) {
      CertPoint q = p;
      q.y *= k * k;
      q.R *= k;
      q.S *= k * k;
      double fk = f_value(csp, q, csp.domain, normy).f;
      if (std::abs(fk - f0) > 1e-8 * (1 + std::abs(f0))) ok = false;
    }
    ++done;
  }
  report(5, ok, "homogeneity: f(k^2 y, z, k R, k^2 S) = f for k in {1e-3,1e-1,10,1e3}");
}

// 6. Modified Cholesky over 500 random symmetric matrices.
void criterion6() {
  std::mt19937 rng(666);
  std::uniform_real_distribution<double> d(-2, 2);
  bool ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + trial % 6;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = d(rng);
    Eigen::MatrixXd Ahat = trial % 3 == 0
                               ? Eigen::MatrixXd(M.transpose() * M +
                                                 0.1 * Eigen::MatrixXd::Identity(n, n))
                               : Eigen::MatrixXd(0.5 * (M + M.transpose()));
    double nrm = Ahat.cwiseAbs().rowwise().sum().maxCoeff();
    auto [R, D] = modified_cholesky(Ahat, default_cholesky_delta(Ahat));
    Eigen::MatrixXd resid =
        R.transpose() * R - Eigen::MatrixXd(D.asDiagonal()) - Ahat;
    if (resid.cwiseAbs().rowwise().sum().maxCoeff() > 1e-10 * std::max(1.0, nrm)) ok = false;
    if (D.minCoeff() < 0.0) ok = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ahat);
    if (es.eigenvalues().minCoeff() >= 1e-6 && D.norm() != 0.0) ok = false;
  }
  report(6, ok, "modified Cholesky: exact reconstruction, D >= 0, D = 0 on definite input");
}

// 7. Slope identity over 1000 random samples.
void criterion7() {
  std::mt19937 rng(777);
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    QuadraticCsp csp = testutil::random_csp(rng);
    Eigen::VectorXd z = testutil::random_point_in(csp.domain, rng);
    Eigen::VectorXd x = testutil::random_point_in(csp.domain, rng);
    Eigen::VectorXd Fx = eval_F(csp, x), Fz = eval_F(csp, z);
    for (int k = 0; k < csp.m; ++k) {
      double lhs = Fx(k) - Fz(k);
      double rhs = slope_row(csp, k, z, x).dot(x - z);
      if (std::abs(lhs - rhs) > 1e-10 * (1 + std::abs(lhs))) ok = false;
    }
  }
  report(7, ok, "slope identity: F_k(x) - F_k(z) = slope (x - z) to 1e-10 relative");
}

// 8. split_complement over 100 random nested pairs.
void criterion8() {
  std::mt19937 rng(888);
  std::uniform_real_distribution<double> d(0, 1);
  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 5;
    BoxVec outer, inner;
    for (int i = 0; i < n; ++i) {
      double lo = 5 * d(rng), hi = lo + 1 + 5 * d(rng);
      outer.push_back(Interval(lo, hi));
      double a = lo + d(rng) * (hi - lo), b = lo + d(rng) * (hi - lo);
      inner.push_back(Interval(std::min(a, b), std::max(a, b)));
    }
    auto pieces = split_complement(outer, inner);
    if ((int)pieces.size() > 2 * n) ok = false;
    double vol = volume(inner);
    for (const BoxVec& p : pieces) vol += volume(p);
    if (std::abs(vol - volume(outer)) > 1e-12 * volume(outer)) ok = false;
  }
  report(8, ok, "split_complement: <= 2n pieces, exact volume identity");
}

// 9. Subgradient vs central finite differences, 100 points per T variant.
void criterion9() {
  std::mt19937 rng(999);
  bool ok = true;
  for (auto variant : {TChoice::Variant::One, TChoice::Variant::NormY}) {
    TChoice choice{variant};
    int done = 0, mismatches = 0;
    while (done < 100) {
      QuadraticCsp csp = testutil::random_csp(rng);
      CertPoint p = testutil::random_cert_point(csp, rng);
      if (p.y.norm() < 0.3) continue;
      bool interior = true;
      for (int i = 0; i < csp.n; ++i) {
        double margin = 0.05 * width(csp.domain[i]);
        if (p.z(i) < csp.domain[i].lo + margin || p.z(i) > csp.domain[i].hi - margin)
          interior = false;
      }
      if (!interior) continue;
      Layout layout{csp.m, csp.n, OptMask{true, true, true, true, true}};
      p.optMask = layout.mask;
      auto fval = [&](const Eigen::VectorXd& x) {
        CertPoint q = p;
        layout.unpack(x, q);
        BoxVec box;
        for (int i = 0; i < csp.n; ++i)
          box.push_back(Interval(std::min(q.u(i), q.v(i)), std::max(q.u(i), q.v(i))));
        return f_value(csp, q, box, choice).f;
      };
      Eigen::VectorXd x0 = layout.pack(p);
      double f0;
      try {
        f0 = fval(x0);
      } catch (const std::domain_error&) {
        continue;
      }
      if (!std::isfinite(f0)) continue;
      BoxVec box;
      for (int i = 0; i < csp.n; ++i) box.push_back(Interval(p.u(i), p.v(i)));
      Eigen::VectorXd ga = layout.pack_grad(f_subgradient(csp, p, box, choice));
      Eigen::VectorXd gfd = testutil::central_fd(fval, x0, 1e-6);
      if ((ga - gfd).norm() > 1e-5 * (1 + ga.norm())) ++mismatches;
      ++done;
    }
    // random points are almost surely away from the kinks; the FD step can
    // still straddle one, so tolerate at most a couple of outliers
    if (mismatches > 2) ok = false;
  }
  {
    QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
    CertPoint p = CertPoint::zeros(1, 1);
    p.y(0) = -1;
    p.z(0) = 0.3;
    p.u(0) = -1;
    p.v(0) = 2;
    Layout layout{1, 1, OptMask{true, true, true, true, true}};
    p.optMask = layout.mask;
    BoxVec box = {Interval(-1, 2)};
    for (auto variant : {TChoice::Variant::One, TChoice::Variant::NormY}) {
      TChoice choice{variant};
      Eigen::VectorXd ga = layout.pack_grad(f_subgradient(csp, p, box, choice));
      auto fval = [&](const Eigen::VectorXd& x) {
        CertPoint q = p;
        layout.unpack(x, q);
        return f_value(csp, q, {Interval(q.u(0), q.v(0))}, choice).f;
      };
      Eigen::VectorXd gfd = testutil::central_fd(fval, layout.pack(p), 1e-6);
      if ((ga - gfd).norm() > 1e-5 * (1 + ga.norm())) ok = false;
    }
  }
  report(9, ok, "subgradient matches central differences (h=1e-6) to 1e-5 relative");
}

// 10. Cost accounting: exact formula and the bundle-Newton example.
void criterion10() {
  Oracle o;
  o.fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Constant(x.size(), x(0) >= 0 ? 1.0 : -1.0);
    return std::abs(x(0));
  };
  LinearConstraints cons;
  SolveOptions opts;
  opts.maxIter = 9;
  opts.tol = 1e-16;
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 25.0);
  SolveReport rep = minimize(o, cons, x0, opts);
  bool ok = rep.cost == (1 + rep.counters.nlc) * (double)rep.counters.nCalls * 4.0;
  ok = ok && rep.counters.nCalls == 1 + rep.iterations;
  ok = ok && bundle_newton_cost(10, 5, 0) == 190.0;
  report(10, ok, "cost accounting: (1+nlc)*nCalls*4 exact; Na=10, N=5, nlc=0 -> 190");
}

// 11. Substitute for the external benchmark: prune-loop volume bookkeeping on
//     the random suite (excluded + remaining conserve the domain).
void criterion11() {
  std::mt19937 rng(1111);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    QuadraticCsp csp = testutil::random_csp(rng, 2, 2);
    PruneBudget budget;
    budget.maxBoxes = 12;
    budget.maxIterPerBox = 40;
    PruneResult res = prune(csp, budget, TChoice{TChoice::Variant::One});
    double excludedVol = 0;
    for (const auto& c : res.excluded) {
      excludedVol += volume(c.box());
      if (!(c.fValue < 0.0)) ok = false;
      if (testutil::grid_has_feasible_point(csp, c.box(), 2000)) ok = false;
    }
    double remainingVol = 0;
    for (const auto& b : res.remaining) remainingVol += volume(b);
    double dom = volume(csp.domain);
    if (std::abs(excludedVol + remainingVol - dom) > 1e-9 * dom) ok = false;
  }
  report(11, ok, "prune bookkeeping: excluded + remaining volumes conserve the domain");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
