#pragma once

// Closed real intervals with enclosure semantics. Endpoints may be infinite
// (used for constraint ranges); domain boxes are expected to be finite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxcert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double l, double h) : lo(l), hi(h) {
    if (!(l <= h))
      throw std::invalid_argument("Interval: lo > hi (" + std::to_string(l) +
                                  " > " + std::to_string(h) + ")");
  }
  static Interval point(double v) { return Interval(v, v); }
  static Interval entire() { return Interval(-kInf, kInf); }
};

inline double inf(const Interval& a) { return a.lo; }
inline double sup(const Interval& a) { return a.hi; }
inline double width(const Interval& a) { return a.hi - a.lo; }
inline bool contains(const Interval& a, double x) { return a.lo <= x && x <= a.hi; }
inline bool is_finite(const Interval& a) { return std::isfinite(a.lo) && std::isfinite(a.hi); }

inline double mid(const Interval& a) {
  if (!is_finite(a)) throw std::domain_error("mid of unbounded interval");
  return 0.5 * (a.lo + a.hi);
}

inline bool subset(const Interval& a, const Interval& b) {
  return b.lo <= a.lo && a.hi <= b.hi;
}

inline Interval hull(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty hull");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return Interval(lo, hi);
}

namespace detail {
// Outward widening by one ulp per endpoint; rigorous mode only.
inline Interval widen(Interval a) {
  if (std::isfinite(a.lo)) a.lo = std::nextafter(a.lo, -kInf);
  if (std::isfinite(a.hi)) a.hi = std::nextafter(a.hi, kInf);
  return a;
}
inline void check_determinate(double v) {
  if (std::isnan(v)) throw std::domain_error("indeterminate interval form");
}
}  // namespace detail

inline Interval add(const Interval& a, const Interval& b, bool rigorous = false) {
  double lo = a.lo + b.lo, hi = a.hi + b.hi;
  detail::check_determinate(lo);
  detail::check_determinate(hi);
  Interval r(lo, hi);
  return rigorous ? detail::widen(r) : r;
}

inline Interval sub(const Interval& a, const Interval& b, bool rigorous = false) {
  double lo = a.lo - b.hi, hi = a.hi - b.lo;
  detail::check_determinate(lo);
  detail::check_determinate(hi);
  Interval r(lo, hi);
  return rigorous ? detail::widen(r) : r;
}

inline Interval mul(const Interval& a, const Interval& b, bool rigorous = false) {
  const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  double lo = p[0], hi = p[0];
  detail::check_determinate(p[0]);
  for (int i = 1; i < 4; ++i) {
    detail::check_determinate(p[i]);
    lo = std::min(lo, p[i]);
    hi = std::max(hi, p[i]);
  }
  Interval r(lo, hi);
  return rigorous ? detail::widen(r) : r;
}

inline Interval scale(const Interval& a, double s, bool rigorous = false) {
  Interval r = s >= 0 ? Interval(a.lo * s, a.hi * s) : Interval(a.hi * s, a.lo * s);
  detail::check_determinate(r.lo);
  detail::check_determinate(r.hi);
  return rigorous ? detail::widen(r) : r;
}

inline Interval operator+(const Interval& a, const Interval& b) { return add(a, b); }
inline Interval operator-(const Interval& a, const Interval& b) { return sub(a, b); }
inline Interval operator*(const Interval& a, const Interval& b) { return mul(a, b); }
inline Interval operator*(const Interval& a, double s) { return scale(a, s); }
inline Interval operator*(double s, const Interval& a) { return scale(a, s); }

// Interval vector (box).
using BoxVec = std::vector<Interval>;

inline bool subset(const BoxVec& a, const BoxVec& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!subset(a[i], b[i])) return false;
  return true;
}

inline double volume(const BoxVec& b) {
  double v = 1.0;
  for (const Interval& c : b) v *= width(c);
  return v;
}

}  // namespace boxcert
