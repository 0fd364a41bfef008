#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <random>

#include "noble/interval.hpp"

using namespace noble;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {
double rnd(std::mt19937_64& g, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(g);
}
}  // namespace

TEST_CASE("basic ops enclose exact arithmetic") {
  for (Rounding mode : {Rounding::inflate, Rounding::directed}) {
    set_rounding_mode(mode);
    std::mt19937_64 gen(12345);
    for (int it = 0; it < 20000; ++it) {
      double a = rnd(gen, -1e3, 1e3), b = rnd(gen, -1e3, 1e3);
      Interval A(a), B(b);
      big ra(a), rb(b);
      CHECK((A + B).contains(static_cast<double>(ra + rb)));
      CHECK((A - B).contains(static_cast<double>(ra - rb)));
      CHECK((A * B).contains(static_cast<double>(ra * rb)));
      if (std::abs(b) > 1e-6) {
        // double(ra/rb) rounds to nearest; the enclosure must still contain it
        CHECK((A / B).contains(static_cast<double>(ra / rb)));
      }
    }
  }
  set_rounding_mode(Rounding::inflate);
}

TEST_CASE("libm wrappers enclose 50-digit references") {
  std::mt19937_64 gen(99);
  for (int it = 0; it < 2000; ++it) {
    double a = rnd(gen, -30.0, 30.0);
    CHECK(iexp(Interval(a)).contains(static_cast<double>(exp(big(a)))));
    double p = rnd(gen, 1e-8, 1e8);
    CHECK(ilog(Interval(p)).contains(static_cast<double>(log(big(p)))));
    CHECK(isqrt(Interval(p)).contains(static_cast<double>(sqrt(big(p)))));
  }
}

TEST_CASE("interval ops are inclusion-monotone on sampled members") {
  std::mt19937_64 gen(7);
  for (int it = 0; it < 5000; ++it) {
    double a = rnd(gen, -10, 10), wa = rnd(gen, 0, 1e-3);
    double b = rnd(gen, -10, 10), wb = rnd(gen, 0, 1e-3);
    Interval A(a - wa, a + wa), B(b - wb, b + wb);
    // sample members and check membership of pointwise results
    for (double ta : {A.lo, A.hi, a}) {
      for (double tb : {B.lo, B.hi, b}) {
        CHECK((A + B).contains(static_cast<double>(big(ta) + big(tb))));
        CHECK((A * B).contains(static_cast<double>(big(ta) * big(tb))));
      }
    }
  }
}

TEST_CASE("integer powers") {
  Interval a(-2.0, 3.0);
  Interval sq = ipow(a, 2);
  CHECK(sq.lo == 0.0);
  CHECK(sq.contains(9.0));
  CHECK(sq.contains(4.0));
  CHECK(ipow(Interval(2.0), 10).contains(1024.0));
  CHECK(ipow(Interval(2.0), -2).contains(0.25));
  std::mt19937_64 gen(31);
  for (int it = 0; it < 2000; ++it) {
    double x = rnd(gen, -3, 3);
    int n = static_cast<int>(rnd(gen, 0, 12));
    CHECK(ipow(Interval(x), n).contains(static_cast<double>(pow(big(x), n))));
  }
}

TEST_CASE("chained products keep controlled width") {
  Interval p(1.0);
  for (int i = 0; i < 1000; ++i) p = p * Interval(1.0000003);
  double exact = std::exp(1000.0 * std::log(1.0000003));
  CHECK(p.contains(exact));
  CHECK(p.width() / p.mid() < 1e-8);
}

TEST_CASE("division guards") {
  CHECK_THROWS(Interval(1.0) / Interval(-1.0, 1.0));
  CHECK_THROWS(ilog(Interval(0.0, 1.0)));
  CHECK_THROWS(isqrt(Interval(-1.0, 1.0)));
}

TEST_CASE("upper-bound lane") {
  Bnd a(2.0), b(3.0);
  CHECK(up_add(a, b).v >= 5.0);
  CHECK(up_mul(a, b).v >= 6.0);
  CHECK(up_div(a, 4.0).v >= 0.5);
  CHECK(up_pow(a, 10).v >= 1024.0);
  CHECK_THROWS(Bnd(-1.0));
  CHECK_THROWS(up_div(a, 0.0));
}

TEST_CASE("euler enclosure") {
  Interval e = euler();
  CHECK(e.contains(2.718281828459045));
  CHECK(e.width() < 1e-10);
}

TEST_CASE("meet tightens, hull widens") {
  Interval a(1.0, 2.0), b(1.5, 3.0);
  Interval m = meet(a, b);
  CHECK(m.lo == 1.5);
  CHECK(m.hi == 2.0);
  Interval h = hull(a, b);
  CHECK(h.lo == 1.0);
  CHECK(h.hi == 3.0);
  CHECK_THROWS(meet(Interval(0.0, 1.0), Interval(2.0, 3.0)));
}
