#pragma once

// Quadratic CSP data model: constraints F_k(x) = c_k^T x + x^T C_k x with
// range boxes F_k over a finite domain box, C_k stored lower triangular.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxcert/interval.hpp"

namespace boxcert {

struct QuadraticCsp {
  int n = 0;
  int m = 0;
  std::vector<Eigen::VectorXd> c;   // m vectors of length n
  std::vector<Eigen::MatrixXd> C;   // m lower-triangular n x n
  std::vector<Interval> Frange;     // m, endpoints may be +-inf
  BoxVec domain;                    // n, finite

  // [-inf,inf] ranges contribute nothing to the certificate.
  bool vacuous(int k) const {
    return Frange[k].lo == -kInf && Frange[k].hi == kInf;
  }

  void validate() const {
    if (n <= 0 || m <= 0) throw std::invalid_argument("csp: n and m must be positive");
    if ((int)c.size() != m || (int)C.size() != m || (int)Frange.size() != m ||
        (int)domain.size() != n)
      throw std::invalid_argument("csp: field sizes inconsistent with n, m");
    for (int k = 0; k < m; ++k) {
      if (c[k].size() != n) throw std::invalid_argument("csp: c[" + std::to_string(k) + "] has wrong length");
      if (C[k].rows() != n || C[k].cols() != n)
        throw std::invalid_argument("csp: C[" + std::to_string(k) + "] has wrong shape");
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (C[k](i, j) != 0.0)
            throw std::invalid_argument("csp: C[" + std::to_string(k) + "](" +
                                        std::to_string(i) + "," + std::to_string(j) +
                                        ") above diagonal is nonzero");
    }
    for (int i = 0; i < n; ++i)
      if (!is_finite(domain[i]))
        throw std::invalid_argument("csp: domain component " + std::to_string(i) + " is unbounded");
  }
};

// w = (R, S): upper triangular plus strictly upper triangular, n1 + n0 = n^2.
inline int w_dimension(int n) { return n * n; }

inline Eigen::VectorXd eval_F(const QuadraticCsp& csp, const Eigen::VectorXd& x) {
  if (x.size() != csp.n) throw std::invalid_argument("eval_F: dimension mismatch");
  Eigen::VectorXd F(csp.m);
  for (int k = 0; k < csp.m; ++k)
    F(k) = csp.c[k].dot(x) + x.dot(csp.C[k] * x);
  return F;
}

inline bool is_feasible(const QuadraticCsp& csp, const Eigen::VectorXd& x) {
  for (int i = 0; i < csp.n; ++i)
    if (!contains(csp.domain[i], x(i))) return false;
  Eigen::VectorXd F = eval_F(csp, x);
  for (int k = 0; k < csp.m; ++k)
    if (!contains(csp.Frange[k], F(k))) return false;
  return true;
}

// Slope row F_k[z,x] = c_k^T + x^T C_k + z^T C_k^T, so that
// F_k(x) - F_k(z) = F_k[z,x] (x - z).
inline Eigen::RowVectorXd slope_row(const QuadraticCsp& csp, int k,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
  if (x.size() != csp.n || z.size() != csp.n)
    throw std::invalid_argument("slope_row: dimension mismatch");
  return csp.c[k].transpose() + x.transpose() * csp.C[k] + z.transpose() * csp.C[k].transpose();
}

// ---------------------------------------------------------------------------
// Problem file I/O.
//
// { "n": 2, "m": 2,
//   "c": [[1,-3],[4,2]],
//   "C": [ [[2,0],[3,4]], [[-1,0],[-2,7]] ],
//   "F": [[-1,7],[-2,0]],
//   "x": [[-3,3],[-4,4]] }
//
// "F" endpoints may be the strings "-inf"/"inf".

namespace detail {

inline double parse_endpoint(const nlohmann::json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw std::invalid_argument("parse: " + path + ": expected number or \"inf\"/\"-inf\"");
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw std::invalid_argument(std::string("parse: missing key \"") + key + "\"");
  return j.at(key);
}

}  // namespace detail

struct ParseOptions {
  // Fold strictly-upper entries onto the lower triangle (x^T C x is invariant).
  bool autoLower = true;
};

inline QuadraticCsp parse_problem(const std::string& text, const ParseOptions& opts = {},
                                  std::vector<std::string>* warnings = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("parse: invalid document: ") + e.what());
  }

  QuadraticCsp csp;
  csp.n = detail::require(j, "n").get<int>();
  csp.m = detail::require(j, "m").get<int>();
  if (csp.n <= 0 || csp.m <= 0) throw std::invalid_argument("parse: n and m must be positive");

  const auto& jc = detail::require(j, "c");
  const auto& jC = detail::require(j, "C");
  const auto& jF = detail::require(j, "F");
  const auto& jx = detail::require(j, "x");
  if ((int)jc.size() != csp.m) throw std::invalid_argument("parse: c: expected m entries");
  if ((int)jC.size() != csp.m) throw std::invalid_argument("parse: C: expected m entries");
  if ((int)jF.size() != csp.m) throw std::invalid_argument("parse: F: expected m entries");
  if ((int)jx.size() != csp.n) throw std::invalid_argument("parse: x: expected n entries");

  for (int k = 0; k < csp.m; ++k) {
    const std::string ck = "c[" + std::to_string(k) + "]";
    if ((int)jc[k].size() != csp.n) throw std::invalid_argument("parse: " + ck + ": expected n entries");
    Eigen::VectorXd v(csp.n);
    for (int i = 0; i < csp.n; ++i) v(i) = jc[k][i].get<double>();
    csp.c.push_back(v);

    const std::string Ck = "C[" + std::to_string(k) + "]";
    if ((int)jC[k].size() != csp.n) throw std::invalid_argument("parse: " + Ck + ": expected n rows");
    Eigen::MatrixXd M(csp.n, csp.n);
    for (int i = 0; i < csp.n; ++i) {
      if ((int)jC[k][i].size() != csp.n)
        throw std::invalid_argument("parse: " + Ck + " row " + std::to_string(i) + ": expected n entries");
      for (int jj = 0; jj < csp.n; ++jj) M(i, jj) = jC[k][i][jj].get<double>();
    }
    for (int i = 0; i < csp.n; ++i)
      for (int jj = i + 1; jj < csp.n; ++jj)
        if (M(i, jj) != 0.0) {
          if (!opts.autoLower)
            throw std::invalid_argument("parse: " + Ck + "(" + std::to_string(i) + "," +
                                        std::to_string(jj) + ") above diagonal is nonzero");
          M(jj, i) += M(i, jj);
          M(i, jj) = 0.0;
          if (warnings)
            warnings->push_back(Ck + ": folded upper-triangular entry (" +
                                std::to_string(i) + "," + std::to_string(jj) +
                                ") onto the lower triangle");
        }
    csp.C.push_back(M);

    const std::string Fk = "F[" + std::to_string(k) + "]";
    if ((int)jF[k].size() != 2) throw std::invalid_argument("parse: " + Fk + ": expected [lo, hi]");
    double lo = detail::parse_endpoint(jF[k][0], Fk + "[0]");
    double hi = detail::parse_endpoint(jF[k][1], Fk + "[1]");
    if (!(lo <= hi)) throw std::invalid_argument("parse: " + Fk + ": lo > hi");
    csp.Frange.push_back(Interval(lo, hi));
    if (lo == -kInf && hi == kInf && warnings)
      warnings->push_back(Fk + ": range is [-inf, inf], constraint is vacuous");
  }

  for (int i = 0; i < csp.n; ++i) {
    const std::string xi = "x[" + std::to_string(i) + "]";
    if ((int)jx[i].size() != 2) throw std::invalid_argument("parse: " + xi + ": expected [lo, hi]");
    double lo = jx[i][0].get<double>();
    double hi = jx[i][1].get<double>();
    if (!(lo <= hi)) throw std::invalid_argument("parse: " + xi + ": lo > hi");
    csp.domain.push_back(Interval(lo, hi));
  }

  csp.validate();
  return csp;
}

inline std::string serialize_problem(const QuadraticCsp& csp) {
  nlohmann::json j;
  j["n"] = csp.n;
  j["m"] = csp.m;
  auto endpoint = [](double v) -> nlohmann::json {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return v;
  };
  for (int k = 0; k < csp.m; ++k) {
    nlohmann::json cv = nlohmann::json::array();
    for (int i = 0; i < csp.n; ++i) cv.push_back(csp.c[k](i));
    j["c"].push_back(cv);
    nlohmann::json Cm = nlohmann::json::array();
    for (int i = 0; i < csp.n; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int jj = 0; jj < csp.n; ++jj) row.push_back(csp.C[k](i, jj));
      Cm.push_back(row);
    }
    j["C"].push_back(Cm);
    j["F"].push_back({endpoint(csp.Frange[k].lo), endpoint(csp.Frange[k].hi)});
  }
  for (int i = 0; i < csp.n; ++i)
    j["x"].push_back({csp.domain[i].lo, csp.domain[i].hi});
  return j.dump(2);
}

}  // namespace boxcert
