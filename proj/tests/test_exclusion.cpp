#include <doctest.h>

#include <random>

#include "boxcert/exclusion.hpp"
#include "test_util.hpp"

using namespace boxcert;

TEST_CASE("box measures") {
  BoxVec domain = {Interval(0, 10), Interval(0, 10)};
  Eigen::VectorXd u(2), v(2);
  u << 2, 3;
  v << 5, 4;
  CHECK(box_measure(BoxMeasure::NegL1, u, v, domain) == doctest::Approx(-4.0));
  CHECK(box_measure(BoxMeasure::NegHalfL2Sq, u, v, domain) == doctest::Approx(-5.0));
  CHECK(box_measure(BoxMeasure::NegLinf, u, v, domain) == doctest::Approx(-3.0));
  // s = (u - lo, v - hi) = (2, 3, -5, -6)
  CHECK(box_measure(BoxMeasure::PosL1, u, v, domain) == doctest::Approx(16.0));
  CHECK(box_measure(BoxMeasure::PosHalfL2Sq, u, v, domain) == doctest::Approx(37.0));
  CHECK(box_measure(BoxMeasure::PosLinf, u, v, domain) == doctest::Approx(6.0));

  BoxVec unbounded = {Interval(0, kInf), Interval(0, 10)};
  CHECK_THROWS_WITH(box_measure(BoxMeasure::PosL1, u, v, unbounded),
                    doctest::Contains("finite domain"));
  CHECK(box_measure(BoxMeasure::NegL1, u, v, unbounded) == doctest::Approx(-4.0));
}

TEST_CASE("measure subgradients match finite differences") {
  BoxVec domain = {Interval(-1, 6), Interval(-2, 5), Interval(0, 3)};
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> d(0.1, 0.9);
  for (BoxMeasure kind : {BoxMeasure::NegL1, BoxMeasure::NegHalfL2Sq, BoxMeasure::PosL1,
                          BoxMeasure::PosHalfL2Sq}) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd u(3), v(3);
      for (int i = 0; i < 3; ++i) {
        double a = domain[i].lo + d(rng) * width(domain[i]);
        double b = domain[i].lo + d(rng) * width(domain[i]);
        u(i) = std::min(a, b);
        v(i) = std::max(a, b) + 1e-3;
      }
      Eigen::VectorXd gu, gv;
      box_measure_subgradient(kind, u, v, domain, gu, gv);
      Eigen::VectorXd x(6);
      x << u, v;
      auto fval = [&](const Eigen::VectorXd& y) {
        return box_measure(kind, y.head(3), y.tail(3), domain);
      };
      Eigen::VectorXd gfd = testutil::central_fd(fval, x);
      Eigen::VectorXd ga(6);
      ga << gu, gv;
      CHECK((ga - gfd).norm() <= 1e-5 * (1 + ga.norm()));
    }
  }
}

TEST_CASE("split_complement worked example") {
  BoxVec outer = {Interval(0, 3), Interval(0, 3)};
  BoxVec inner = {Interval(1, 2), Interval(1, 2)};
  auto pieces = split_complement(outer, inner);
  REQUIRE(pieces.size() == 4);
  // slab sweep: [0,1]x[0,3], [2,3]x[0,3], [1,2]x[0,1], [1,2]x[2,3]
  CHECK(pieces[0][0].hi == 1);
  CHECK(pieces[0][1].lo == 0);
  CHECK(pieces[0][1].hi == 3);
  CHECK(pieces[1][0].lo == 2);
  CHECK(pieces[2][0].lo == 1);
  CHECK(pieces[2][0].hi == 2);
  CHECK(pieces[2][1].hi == 1);
  CHECK(pieces[3][1].lo == 2);
  double vol = 0;
  for (const BoxVec& p : pieces) vol += volume(p);
  CHECK(vol == doctest::Approx(9.0 - 1.0));
}

TEST_CASE("split_complement edge cases") {
  BoxVec outer = {Interval(0, 3)};
  CHECK(split_complement(outer, outer).empty());
  auto touching = split_complement(outer, {Interval(0, 1)});
  REQUIRE(touching.size() == 1);
  CHECK(touching[0][0].lo == 1);
  CHECK(touching[0][0].hi == 3);
  CHECK_THROWS(split_complement({Interval(0, 1)}, {Interval(0, 2)}));
}

TEST_CASE("split_complement volume conservation on random boxes") {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> d(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 4;
    BoxVec outer, inner;
    for (int i = 0; i < n; ++i) {
      double lo = 5 * d(rng), hi = lo + 1 + 5 * d(rng);
      outer.push_back(Interval(lo, hi));
      double a = lo + d(rng) * (hi - lo), b = lo + d(rng) * (hi - lo);
      inner.push_back(Interval(std::min(a, b), std::max(a, b)));
    }
    auto pieces = split_complement(outer, inner);
    CHECK((int)pieces.size() <= 2 * n);
    double vol = volume(inner);
    for (const BoxVec& p : pieces) {
      vol += volume(p);
      CHECK(subset(p, outer));
      // each piece is interior-disjoint from the inner box in some dimension
      bool disjoint = false;
      for (int i = 0; i < n; ++i)
        if (p[i].hi <= inner[i].lo + 1e-12 || p[i].lo >= inner[i].hi - 1e-12) disjoint = true;
      CHECK(disjoint);
    }
    CHECK(vol == doctest::Approx(volume(outer)).epsilon(1e-12));
  }
}

TEST_CASE("find on the 1-D infeasible example, fixed whole box") {
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  TChoice normy{TChoice::Variant::NormY};
  FindOptions opts;
  opts.earlyExitNegative = false;
  opts.solve.maxIter = 300;
  opts.solve.tol = 1e-8;
  FindResult res = find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(1), normy,
                                      /*fixedBox=*/true, opts);
  REQUIRE(res.kind == FindResult::Kind::Excluded);
  CHECK(res.cert->u(0) == -1.0);
  CHECK(res.cert->v(0) == 2.0);
  CHECK(res.cert->fValue <= -0.5 + 1e-5);
  CHECK(res.cert->fValue >= -0.5 - 1e-5);
  // the whole domain really has no feasible point
  CHECK(!testutil::grid_has_feasible_point(csp, csp.domain));
}

TEST_CASE("find returns the feasible midpoint when there is one") {
  QuadraticCsp csp = testutil::csp2d();
  FindResult res = find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(2),
                                      TChoice{TChoice::Variant::One}, true);
  REQUIRE(res.kind == FindResult::Kind::FeasibleFound);
  CHECK(res.feasiblePoint.norm() == 0.0);
}

TEST_CASE("find with a variable box certifies a sub-box") {
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  TChoice one{TChoice::Variant::One};
  FindOptions opts;
  opts.start.strictInterior = true;
  opts.solve.maxIter = 200;
  Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 0.3);
  FindResult res = find_exclusion_box(csp, csp.domain, r, one, /*fixedBox=*/false, opts);
  REQUIRE(res.kind == FindResult::Kind::Excluded);
  CHECK(res.cert->v(0) - res.cert->u(0) >= 0.3 - 1e-9);
  CHECK(res.cert->u(0) >= -1.0 - 1e-9);
  CHECK(res.cert->v(0) <= 2.0 + 1e-9);
  CHECK(res.cert->fValue < 0.0);
  CHECK(!testutil::grid_has_feasible_point(csp, res.cert->box()));
}

TEST_CASE("find rejects regions outside the domain") {
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  CHECK_THROWS_WITH(find_exclusion_box(csp, {Interval(-5, 0)}, Eigen::VectorXd::Zero(1),
                                       TChoice{}, true),
                    doctest::Contains("region"));
}

TEST_CASE("enlarge grows the certified box") {
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  TChoice one{TChoice::Variant::One};
  FindOptions fopts;
  fopts.start.strictInterior = true;  // start from [-0.7, 1.7]
  fopts.earlyExitNegative = false;
  fopts.solve.maxIter = 200;
  fopts.solve.tol = 1e-7;
  FindResult found =
      find_exclusion_box(csp, csp.domain, Eigen::VectorXd::Zero(1), one, true, fopts);
  REQUIRE(found.kind == FindResult::Kind::Excluded);
  REQUIRE(found.cert->fValue < -0.25);

  EnlargeOptions eopts;
  eopts.solve.inner.maxIter = 200;
  ExclusionCertificate big =
      enlarge_exclusion_box(csp, *found.cert, -0.25, BoxMeasure::PosL1, eopts);
  CHECK(big.fValue < 0.0);
  // never shrinks, stays inside the domain
  CHECK(big.u(0) <= found.cert->u(0) + 1e-9);
  CHECK(big.v(0) >= found.cert->v(0) - 1e-9);
  CHECK(big.u(0) >= -1.0 - 1e-9);
  CHECK(big.v(0) <= 2.0 + 1e-9);
  // PosL1 is the distance to the full domain; enlarging drives it toward 0
  double before = box_measure(BoxMeasure::PosL1, found.cert->u, found.cert->v, csp.domain);
  double after = box_measure(BoxMeasure::PosL1, big.u, big.v, csp.domain);
  CHECK(after <= before + 1e-9);
  CHECK(!testutil::grid_has_feasible_point(csp, big.box()));

  CHECK_THROWS_WITH(enlarge_exclusion_box(csp, *found.cert, 0.1, BoxMeasure::PosL1),
                    doctest::Contains("delta"));
  CHECK_THROWS(enlarge_exclusion_box(csp, *found.cert, 2 * found.cert->fValue,
                                     BoxMeasure::PosL1));
}

TEST_CASE("objective_cut") {
  QuadraticCsp csp = testutil::csp2d();
  QuadraticCsp cut = objective_cut(csp, 1, -0.5);
  CHECK(cut.m == 2);
  CHECK(cut.Frange[0].lo == -kInf);
  CHECK(cut.Frange[0].hi == -0.5);
  CHECK(cut.c[0] == csp.c[1]);
  CHECK(cut.Frange[1].lo == csp.Frange[0].lo);

  Eigen::VectorXd cObj(2);
  cObj << 1, 0;
  QuadraticCsp added = objective_cut(csp, cObj, Eigen::MatrixXd::Zero(2, 2), 3.0);
  CHECK(added.m == 3);
  CHECK(added.Frange[0].hi == 3.0);
  CHECK(added.c[1] == csp.c[0]);
  CHECK_THROWS(objective_cut(csp, 5, 0.0));
}

TEST_CASE("prune on the infeasible 1-D example excludes everything") {
  QuadraticCsp csp = testutil::csp1d(Interval(-2, -1));
  PruneBudget budget;
  budget.maxBoxes = 20;
  PruneResult res = prune(csp, budget, TChoice{TChoice::Variant::NormY});
  CHECK(res.feasiblePoints.empty());
  CHECK(!res.excluded.empty());
  double excludedVol = 0;
  for (const auto& c : res.excluded) excludedVol += volume(c.box());
  double remainingVol = 0;
  for (const auto& b : res.remaining) remainingVol += volume(b);
  CHECK(excludedVol + remainingVol == doctest::Approx(volume(csp.domain)).epsilon(1e-9));
  for (const auto& c : res.excluded)
    CHECK(!testutil::grid_has_feasible_point(csp, c.box(), 2000));
}

TEST_CASE("prune finds a feasible point on the 2-D example") {
  QuadraticCsp csp = testutil::csp2d();
  PruneBudget budget;
  budget.maxBoxes = 10;
  PruneResult res = prune(csp, budget, TChoice{TChoice::Variant::One});
  REQUIRE(!res.feasiblePoints.empty());
  CHECK(is_feasible(csp, res.feasiblePoints[0]));
}

TEST_CASE("prune conserves volume and certificates are sound") {
  std::mt19937 rng(1818);
  for (int trial = 0; trial < 10; ++trial) {
    QuadraticCsp csp = testutil::random_csp(rng, 2, 2);
    PruneBudget budget;
    budget.maxBoxes = 15;
    budget.maxIterPerBox = 40;
    PruneResult res = prune(csp, budget, TChoice{TChoice::Variant::One});
    double excludedVol = 0;
    for (const auto& c : res.excluded) {
      excludedVol += volume(c.box());
      CHECK(c.fValue < 0.0);
      CHECK(!testutil::grid_has_feasible_point(csp, c.box(), 2000));
    }
    // volume bookkeeping: excluded + remaining covers the domain exactly,
    // except that bisected feasible/unknown boxes stay in the worklist
    double remainingVol = 0;
    for (const auto& b : res.remaining) remainingVol += volume(b);
    CHECK(excludedVol + remainingVol <= volume(csp.domain) * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("emit_report format") {
  PruneRow row;
  row.boxId = 0;
  row.parentId = -1;
  row.box = {Interval(-1, 2)};
  row.status = "excluded";
  row.fValue = -0.5;
  row.iterations = 3;
  row.nCalls = 4;
  row.cost = 16.0;
  std::string csv = emit_report({row}, 1);
  CHECK(csv == "boxId,parentId,lo1,hi1,status,fValue,iterations,nCalls,cost,wallMillis\n"
               "0,-1,-1,2,excluded,-0.5,3,4,16,0\n");
}
