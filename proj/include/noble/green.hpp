#pragma once
#include <map>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "noble/interval.hpp"
#include "noble/lattice.hpp"

namespace noble {

// e^{-u} I_a(u) for the modified Bessel function I_a: certified enclosure
// from the positive power series plus an explicit truncation tail. Internals
// run at 50 significant digits, so the returned width is far below double
// resolution (well under 1e-13 relative).
Interval bessel_factor(int a, double u);

// Normalized simple-random-walk step distributions p_m = (2d)^{-m} c_m as
// interval enclosures of the exact rationals. Values are kept on
// |x|_1 <= radius; per-shell maxima cover the rest of the (finite, |x|_1 <= m)
// support so restricted suprema come straight off the table.
class SrwPolyTable {
 public:
  SrwPolyTable(Dim d, int Lmax = 36, int radius = 14);
  Dim d() const { return d_; }
  int Lmax() const { return Lmax_; }
  int radius() const { return radius_; }
  Interval at(int m, const Key& x) const;  // exact zero outside the support
  Interval origin(int m) const { return at(m, origin_key()); }
  // sup of p_m over |x|_1 >= l1min (0 if l1min > m)
  Interval sup_from(int m, int l1min) const;

 private:
  Dim d_;
  int Lmax_, radius_;
  std::vector<std::vector<std::pair<Key, Interval>>> p_;  // [m], sorted by key
  std::vector<std::vector<Interval>> shell_;               // [m][l1 norm]
};
const SrwPolyTable& srw_table(Dim d);

// Non-backtracking shell counts as integer polynomials in the step
// transform: c_n(x) = sum_r gamma[r] p_r(x) with p_r the normalized
// simple-random-walk distributions. This is what lets products of shells
// collapse to single convolutions.
std::vector<cpp_int> nbw_shell_poly(Dim d, int n);

// Green integrals I_{n,m}(x) = (D^{*m} * C^{*n})(x) with C the critical
// simple-random-walk Green function, via certified Clenshaw-Curtis panels in
// the heat-kernel representation
//   I_{n,0}(x) = d^n/(n-1)! Int_0^oo u^{n-1} prod_mu f_{|x_mu|}(u) du,
// f_a = bessel_factor(a, .), plus the exact one-step shift recursion in m.
class GreenTable {
 public:
  GreenTable(Dim d, int nmax = 7, int radius = 20);
  Dim d() const { return d_; }
  int nmax() const { return nmax_; }
  int radius() const { return radius_; }

  // n >= 1, m >= 0, |x|_1 + m <= radius
  Interval I(int n, int m, const Key& x) const;
  // global sup over x: positive-definiteness at even m, one averaging step
  // down at odd m
  Interval sup_all(int n, int m) const;

  // sum_y |y|^2 C^{*n}(y) (D^{*l} * C^{*n'})(x-y), evaluated exactly through
  // the transform identity
  //   -Lap_k C^n = n C^{n+1} D - n(n+1)/(2d) C^{n+2} (1 - D_2),
  // D_2(k) = (1/d) sum_s cos 2k_s. Requires n + n' + 2 <= nmax and
  // 2(n + n' + 2) < d.
  Interval weighted_chain(int n, int nprime, int l, const Key& x) const;

 private:
  struct Panel {
    double a, b;                  // u-range
    std::vector<double> u;        // node positions (K of them)
    Interval f0_half_at_a;        // f_0(a/2), for the derivative bounds
    Interval f0_at_a;             // f_0(a)
  };

  const std::unordered_map<Key, Interval>& field(int n, int m) const;
  void build_base(int n) const;  // I_{n,0}
  Interval quad_error(int n) const;
  double deriv_bound(int order, const Panel& p) const;

  Dim d_;
  int nmax_, radius_;
  std::vector<Panel> panels_;
  std::vector<Interval> cw_;                   // Clenshaw-Curtis weights on [-1,1]
  std::vector<std::vector<Interval>> fa_;      // [node][a <= radius]
  std::vector<std::vector<Interval>> f0pow_;   // [node][j]: f_0^(jlo + j)
  int jlo_;                                    // lowest stored f_0 exponent
  std::vector<std::pair<Key, std::vector<std::pair<int, int>>>> ball_;  // key, groups
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, std::unordered_map<Key, Interval>> fields_;
  mutable std::vector<Interval> tail_;  // [n]: envelope rest beyond the panels
  mutable std::vector<Interval> qerr_;  // [n]: summed certified panel remainders
};
const GreenTable& green_table(Dim d);

}  // namespace noble
