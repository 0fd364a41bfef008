#include "noble/interval.hpp"

#include <atomic>

namespace noble {

namespace {
std::atomic<Rounding> g_mode{Rounding::inflate};

using detail::pad_dn;
using detail::pad_up;

double lo_add(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_add(a, b, false)
                                      : pad_dn(a + b);
}
double hi_add(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_add(a, b, true)
                                      : pad_up(a + b);
}
double lo_sub(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_sub(a, b, false)
                                      : pad_dn(a - b);
}
double hi_sub(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_sub(a, b, true)
                                      : pad_up(a - b);
}
double lo_mul(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_mul(a, b, false)
                                      : pad_dn(a * b);
}
double hi_mul(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_mul(a, b, true)
                                      : pad_up(a * b);
}
double lo_div(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_div(a, b, false)
                                      : pad_dn(a / b);
}
double hi_div(double a, double b) {
  return g_mode == Rounding::directed ? detail::dir_div(a, b, true)
                                      : pad_up(a / b);
}
}  // namespace

Rounding rounding_mode() noexcept { return g_mode; }
void set_rounding_mode(Rounding m) noexcept { g_mode = m; }

Interval Interval::ratio(double p, double q) {
  if (q == 0.0) throw std::invalid_argument("Interval::ratio: zero denominator");
  double a = lo_div(p, q), b = hi_div(p, q);
  return Interval(std::min(a, b), std::max(a, b));
}

Interval operator+(const Interval& a, const Interval& b) {
  return Interval(lo_add(a.lo, b.lo), hi_add(a.hi, b.hi));
}

Interval operator-(const Interval& a, const Interval& b) {
  return Interval(lo_sub(a.lo, b.hi), hi_sub(a.hi, b.lo));
}

Interval operator*(const Interval& a, const Interval& b) {
  double l1 = lo_mul(a.lo, b.lo), l2 = lo_mul(a.lo, b.hi);
  double l3 = lo_mul(a.hi, b.lo), l4 = lo_mul(a.hi, b.hi);
  double h1 = hi_mul(a.lo, b.lo), h2 = hi_mul(a.lo, b.hi);
  double h3 = hi_mul(a.hi, b.lo), h4 = hi_mul(a.hi, b.hi);
  return Interval(std::min(std::min(l1, l2), std::min(l3, l4)),
                  std::max(std::max(h1, h2), std::max(h3, h4)));
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && b.hi >= 0.0)
    throw std::domain_error("Interval division by interval containing 0");
  double l1 = lo_div(a.lo, b.lo), l2 = lo_div(a.lo, b.hi);
  double l3 = lo_div(a.hi, b.lo), l4 = lo_div(a.hi, b.hi);
  double h1 = hi_div(a.lo, b.lo), h2 = hi_div(a.lo, b.hi);
  double h3 = hi_div(a.hi, b.lo), h4 = hi_div(a.hi, b.hi);
  return Interval(std::min(std::min(l1, l2), std::min(l3, l4)),
                  std::max(std::max(h1, h2), std::max(h3, h4)));
}

Interval isqrt(const Interval& a) {
  if (a.lo < 0.0) throw std::domain_error("isqrt: negative");
  // sqrt is correctly rounded; pad covers the 0.5 ulp either way
  double l = a.lo == 0.0 ? 0.0 : pad_dn(std::sqrt(a.lo));
  return Interval(std::max(l, 0.0), pad_up(std::sqrt(a.hi)));
}

Interval iexp(const Interval& a) {
  // glibc exp is a few ulp; EPS_REL = 1e-12 dominates by ~3 orders
  double l = pad_dn(std::exp(a.lo));
  return Interval(std::max(l, 0.0), pad_up(std::exp(a.hi)));
}

Interval ilog(const Interval& a) {
  if (a.lo <= 0.0) throw std::domain_error("ilog: nonpositive");
  return Interval(pad_dn(std::log(a.lo)), pad_up(std::log(a.hi)));
}

Interval ipow(const Interval& a, int n) {
  if (n < 0) return Interval(1.0) / ipow(a, -n);
  Interval r(1.0);
  if (n == 0) return r;
  // exact powers of two via squaring keeps widths tight for big n
  Interval base = a;
  int k = n;
  // even powers of an interval straddling 0 are >= 0
  if (k % 2 == 0 && a.lo < 0.0 && a.hi > 0.0) {
    Interval m = imax(iabs(a), Interval(0.0));
    Interval p = ipow(m, k);
    return Interval(0.0, p.hi);
  }
  while (k > 0) {
    if (k & 1) r = r * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return r;
}

Interval iabs(const Interval& a) {
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return -a;
  return Interval(0.0, std::max(-a.lo, a.hi));
}

Interval hull(const Interval& a, const Interval& b) {
  return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

Interval imax(const Interval& a, const Interval& b) {
  return Interval(std::max(a.lo, b.lo), std::max(a.hi, b.hi));
}

Interval imin(const Interval& a, const Interval& b) {
  return Interval(std::min(a.lo, b.lo), std::min(a.hi, b.hi));
}

Interval meet(const Interval& a, const Interval& b) {
  double l = std::max(a.lo, b.lo), h = std::min(a.hi, b.hi);
  if (l > h) throw std::domain_error("meet: disjoint enclosures of one value");
  return Interval(l, h);
}

Interval euler() { return iexp(Interval(1.0)); }

Bnd up_add(Bnd a, Bnd b) { return Bnd(hi_add(a.v, b.v)); }
Bnd up_mul(Bnd a, Bnd b) { return Bnd(hi_mul(a.v, b.v)); }
Bnd up_div(Bnd a, double den_lo) {
  if (!(den_lo > 0.0)) throw std::domain_error("up_div: need positive lower bound");
  return Bnd(hi_div(a.v, den_lo));
}
Bnd up_pow(Bnd a, int n) {
  if (n < 0) throw std::domain_error("up_pow: negative exponent");
  return Bnd(ipow(a.as_interval(), n).hi);
}

}  // namespace noble
