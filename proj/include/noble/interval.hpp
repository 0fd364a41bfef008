#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace noble {

// Rounding policy for bound-producing arithmetic.
//
// inflate (default): each operation is evaluated in double and widened
// outward by one ulp plus EPS_REL relative slack. EPS_REL dominates the
// rounding error of every primitive we use (IEEE basic ops are <= 0.5 ulp,
// glibc exp/log are a few ulp), so the result is a certified enclosure.
//
// directed: basic ops are evaluated twice under FE_DOWNWARD / FE_UPWARD
// (see directed.cpp). Slower, tighter, used for verification runs.
enum class Rounding { inflate, directed };

Rounding rounding_mode() noexcept;
void set_rounding_mode(Rounding m) noexcept;

inline constexpr double EPS_REL = 1e-12;

namespace detail {
// compiled with -frounding-math in its own TU
double dir_add(double a, double b, bool up) noexcept;
double dir_sub(double a, double b, bool up) noexcept;
double dir_mul(double a, double b, bool up) noexcept;
double dir_div(double a, double b, bool up) noexcept;

inline double inf() noexcept { return std::numeric_limits<double>::infinity(); }

inline double pad_up(double x) noexcept {
  if (!std::isfinite(x)) return x;
  double y = x + std::abs(x) * EPS_REL;
  return std::nextafter(y, inf());
}
inline double pad_dn(double x) noexcept {
  if (!std::isfinite(x)) return x;
  double y = x - std::abs(x) * EPS_REL;
  return std::nextafter(y, -inf());
}
}  // namespace detail

// Closed interval [lo,hi], the two-sided enclosure type. Invariant lo <= hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  explicit Interval(double exact) : lo(exact), hi(exact) {}
  Interval(double l, double h) : lo(l), hi(h) {
    if (!(lo <= hi)) throw std::invalid_argument("Interval: lo > hi");
  }

  static Interval exact(double v) { return Interval(v); }
  // enclosure of p/q from integer data, outward-rounded
  static Interval ratio(double p, double q);

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool is_nonneg() const { return lo >= 0.0; }

  Interval operator-() const { return Interval(-hi, -lo); }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);  // 0 not in b
inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }
inline Interval& operator/=(Interval& a, const Interval& b) { return a = a / b; }

inline Interval operator+(const Interval& a, double b) { return a + Interval(b); }
inline Interval operator-(const Interval& a, double b) { return a - Interval(b); }
inline Interval operator*(const Interval& a, double b) { return a * Interval(b); }
inline Interval operator/(const Interval& a, double b) { return a / Interval(b); }
inline Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
inline Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
inline Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
inline Interval operator/(double a, const Interval& b) { return Interval(a) / b; }

Interval isqrt(const Interval& a);          // a.lo >= 0
Interval iexp(const Interval& a);
Interval ilog(const Interval& a);           // a.lo > 0
Interval ipow(const Interval& a, int n);    // n >= 0, or n<0 with 0 not in a
Interval iabs(const Interval& a);
Interval hull(const Interval& a, const Interval& b);
Interval imax(const Interval& a, const Interval& b);
Interval imin(const Interval& a, const Interval& b);
// intersection; throws if empty (used to tighten enclosures of one quantity)
Interval meet(const Interval& a, const Interval& b);

// euler's number as an enclosure (exp(1) widened)
Interval euler();

// Certified upper bound on a nonnegative quantity: the one-sided lane used by
// ledger arithmetic. Kept distinct from Interval so signatures say what they
// mean.
struct Bnd {
  double v = 0.0;
  Bnd() = default;
  explicit Bnd(double b) : v(b) {
    if (!(b >= 0.0)) throw std::invalid_argument("Bnd: negative");
  }
  static Bnd of(const Interval& i) { return Bnd(std::max(i.hi, 0.0)); }
  Interval as_interval() const { return Interval(0.0, v); }
};

Bnd up_add(Bnd a, Bnd b);
Bnd up_mul(Bnd a, Bnd b);
// quotient upper bound needs a certified LOWER bound of the denominator
Bnd up_div(Bnd a, double den_lo);
Bnd up_pow(Bnd a, int n);  // n >= 0

}  // namespace noble
