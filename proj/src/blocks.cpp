#include "noble/blocks.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "noble/green.hpp"

namespace noble {

namespace {

// Degree cap of the polynomial part of a Mix product (keeps p_{a+b} inside
// the tabulated range); overflowing terms are absorbed into I_{1,a} via
// p_a <= p_a * C (C >= delta_0).
constexpr int kPolyCap = 18;
// Largest m passed to the far Green envelope; larger m is peeled first.
constexpr int kFarMCap = 10;
// Canonical scan radii before switching to far envelopes.
constexpr int kPinScan = 6;
constexpr int kOffsetScan = 4;

Interval peel_ratio(Dim d, int e) {
  // D^{*e} * C <= ((2d-1)/(2d))^e C pointwise (drop the nonneg subtractions
  // of the exact one-step identity D*C = (2d-1)/(2d) (C - delta)).
  return ipow(Interval(2.0 * d - 1.0) / Interval(2.0 * d), e);
}

Interval hull0(const Interval& a) { return Interval(0.0, std::max(a.hi, 0.0)); }

Interval gamma_crit(Dim d) { return Interval(2.0 * d) / Interval(2.0 * d - 1.0); }

// sum of C^{*n} over |u|_1 <= s (cached; small balls only)
Interval cn_ball_sum(Dim d, int n, int s) {
  static std::map<std::tuple<int, int, int>, Interval> memo;
  static std::mutex mu;
  std::tuple<int, int, int> key{d, n, s};
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
  }
  const GreenTable& gt = green_table(d);
  Interval acc(0.0);
  for (const Key& k : keys_in_ball(s))
    acc = acc + orbit_size(k, d) * gt.I(n, 0, k);
  std::lock_guard<std::mutex> lk(mu);
  memo.emplace(key, acc);
  return acc;
}

// sup of I_{n,m} over |x|_1 >= l1min. For m > 0 the direct envelope
// degenerates once the D-steps can cover the distance, so split the Green
// part into a near ball (where the step polynomial must carry the distance)
// and its complement (where C^{*n} itself is far):
//   I_{n,m}(x) <= [sum_{|u|<=s} C^n(u)] sup_{|w|>=L-s} p_m
//              + sup_{|u|>s} C^n(u).
Interval far_I(Dim d, int n, int m, int l1min) {
  if (m == 0) return hull0(far_green_sup(d, n, 0, l1min));
  const SrwPolyTable& srw = srw_table(d);
  Interval pre(1.0);
  if (m > srw.Lmax()) {
    pre = peel_ratio(d, m - srw.Lmax());
    m = srw.Lmax();
  }
  Interval best = far_green_sup(d, n, std::min(m, kFarMCap), l1min);
  if (m > kFarMCap) best = best * peel_ratio(d, m - kFarMCap);
  for (int s = 1; s <= std::min(l1min - 1, 6); ++s) {
    Interval b = cn_ball_sum(d, n, s) * srw.sup_from(m, l1min - s) +
                 far_green_sup(d, n, 0, s + 1);
    if (b.hi < best.hi) best = b;
  }
  return hull0(pre * best);
}

// I_{n,m}(x) through the table, peeling m when |x|_1 + m exceeds the table
// radius and falling back to the far envelope outside it. Peeled or far
// values are upper bounds only, so they come back hulled with 0.
Interval green_I(Dim d, int n, int m, const Key& x) {
  const GreenTable& gt = green_table(d);
  if (n < 1 || n > gt.nmax())
    throw std::runtime_error("mix: C-power outside table range");
  int l1 = key_norm1(x);
  if (l1 > gt.radius()) return far_I(d, n, m, l1);
  int mcap = gt.radius() - l1;
  if (m <= mcap) return gt.I(n, m, x);
  return hull0(peel_ratio(d, m - mcap) * gt.I(n, mcap, x));
}

template <class F>
Interval d2_conv(Dim d, const Key& t, F&& eval) {
  // (D_2 * f)(t), D_2 the +-2e_i step kernel
  Interval acc(0.0);
  for (const auto& [k, cnt] : two_step_transitions(t, d))
    acc = acc + Interval(static_cast<double>(cnt)) * eval(k);
  return acc / Interval(2.0 * d);
}

void add_pcoef(Mix& m, int a, const Interval& c) {
  if (static_cast<int>(m.pcoef.size()) <= a) m.pcoef.resize(a + 1, Interval(0.0));
  m.pcoef[a] = m.pcoef[a] + c;
}

void add_ipart(Mix& m, const Interval& coef, int n, int mm) {
  for (auto& ip : m.iparts)
    if (ip.n == n && ip.m == mm) {
      ip.coef = ip.coef + coef;
      return;
    }
  m.iparts.push_back({coef, n, mm});
}

}  // namespace

Mix mix_gtilde(const GBoundFamily& gb, int l, bool exact_len) {
  // Length-a walk counts are dominated by (2d)^a p_a; the tail beyond the
  // explicit lengths is taken verbatim from the certified line bound.
  const Dim d = gb.p.d;
  const Interval step = Interval(2.0 * d) * gb.mubar;
  Mix m;
  if (exact_len) {
    add_pcoef(m, l, l == 0 ? Interval(1.0) : ipow(step, l));
  } else {
    int lo = std::max(l, 0);
    for (int a = lo; a < gb.p.M; ++a)
      add_pcoef(m, a, a == 0 ? Interval(1.0) : ipow(step, a));
  }
  m.iparts = gb.gtilde_line(l, exact_len).kparts;
  return m;
}

Mix mix_scale(Mix a, const Interval& c) {
  for (auto& pc : a.pcoef) pc = pc * c;
  for (auto& ip : a.iparts) ip.coef = ip.coef * c;
  return a;
}

Mix mix_add(const Mix& a, const Mix& b) {
  Mix m = a;
  for (int i = 0; i < static_cast<int>(b.pcoef.size()); ++i) add_pcoef(m, i, b.pcoef[i]);
  for (const auto& ip : b.iparts) add_ipart(m, ip.coef, ip.n, ip.m);
  return m;
}

Mix mix_convolve(Dim d, const Mix& a, const Mix& b) {
  Mix m;
  for (int i = 0; i < static_cast<int>(a.pcoef.size()); ++i) {
    if (a.pcoef[i].hi <= 0.0) continue;
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j) {
      if (b.pcoef[j].hi <= 0.0) continue;
      Interval c = a.pcoef[i] * b.pcoef[j];
      if (i + j <= kPolyCap)
        add_pcoef(m, i + j, c);
      else
        add_ipart(m, c, 1, i + j);  // p_k <= I_{1,k}
    }
    for (const auto& ip : b.iparts)
      add_ipart(m, a.pcoef[i] * ip.coef, ip.n, ip.m + i);
  }
  for (const auto& ip : a.iparts) {
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j) {
      if (b.pcoef[j].hi <= 0.0) continue;
      add_ipart(m, ip.coef * b.pcoef[j], ip.n, ip.m + j);
    }
    for (const auto& jp : b.iparts)
      add_ipart(m, ip.coef * jp.coef, ip.n + jp.n, ip.m + jp.m);
  }
  return m;
}

Mix mix_shift_d(Dim d, const Mix& a, int steps) {
  (void)d;
  Mix m;
  for (int i = 0; i < static_cast<int>(a.pcoef.size()); ++i)
    if (a.pcoef[i].hi > 0.0) add_pcoef(m, i + steps, a.pcoef[i]);
  for (const auto& ip : a.iparts) add_ipart(m, ip.coef, ip.n, ip.m + steps);
  return m;
}

Bnd mix_eval(Dim d, const Mix& a, const Key& x) {
  const SrwPolyTable& srw = srw_table(d);
  Interval acc(0.0);
  for (int i = 0; i < static_cast<int>(a.pcoef.size()); ++i)
    if (a.pcoef[i].hi > 0.0) acc = acc + a.pcoef[i] * srw.at(i, x);
  for (const auto& ip : a.iparts) acc = acc + ip.coef * green_I(d, ip.n, ip.m, x);
  return Bnd::of(acc);
}

Bnd mix_sup_far(Dim d, const Mix& a, int l1min) {
  const SrwPolyTable& srw = srw_table(d);
  Interval acc(0.0);
  for (int i = 0; i < static_cast<int>(a.pcoef.size()); ++i)
    if (a.pcoef[i].hi > 0.0) acc = acc + a.pcoef[i] * srw.sup_from(i, l1min);
  for (const auto& ip : a.iparts) acc = acc + ip.coef * far_I(d, ip.n, ip.m, l1min);
  return Bnd::of(acc);
}

Bnd mix_sup(Dim d, const Mix& a, int scan_radius) {
  Bnd best = mix_sup_far(d, a, scan_radius + 1);
  for (const Key& k : keys_in_ball(scan_radius)) {
    Bnd v = mix_eval(d, a, k);
    if (v.v > best.v) best = v;
  }
  return best;
}

namespace {

// ---- weighted atom pairs: sum_y |y|^2 (atom_a)(y) (atom_b)(t-y) ----

// both atoms polynomial: exact transform identity
Interval wpp(Dim d, int a, int b, const Key& t) {
  if (a == 0) return Interval(0.0);
  const SrwPolyTable& srw = srw_table(d);
  Interval w = Interval(static_cast<double>(a)) * srw.at(a + b, t);
  if (a >= 2) {
    Interval c = Interval(static_cast<double>(a) * (a - 1.0)) / Interval(2.0 * d);
    Interval inner =
        srw.at(a + b - 2, t) -
        d2_conv(d, t, [&](const Key& k) { return srw.at(a + b - 2, k); });
    w = w - c * inner;
  }
  return w;
}

Interval wpp_far(Dim d, int a, int b, int l1min) {
  if (a == 0) return Interval(0.0);
  const SrwPolyTable& srw = srw_table(d);
  Interval w = Interval(static_cast<double>(a)) * srw.sup_from(a + b, l1min);
  if (a >= 2) {
    Interval c = Interval(static_cast<double>(a) * (a - 1.0)) / Interval(2.0 * d);
    w = w + c * srw.sup_from(a + b - 2, std::max(0, l1min - 2));
  }
  return hull0(w);
}

// polynomial weighted atom against a Green integral
Interval wpI(Dim d, int a, int n, int m, const Key& t) {
  if (a == 0) return Interval(0.0);
  Interval w = Interval(static_cast<double>(a)) * green_I(d, n, m + a, t);
  if (a >= 2) {
    Interval c = Interval(static_cast<double>(a) * (a - 1.0)) / Interval(2.0 * d);
    Interval inner =
        green_I(d, n, m + a - 2, t) -
        d2_conv(d, t, [&](const Key& k) { return green_I(d, n, m + a - 2, k); });
    w = w - c * inner;
  }
  return w;
}

Interval wpI_far(Dim d, int a, int n, int m, int l1min) {
  if (a == 0) return Interval(0.0);
  Interval w = Interval(static_cast<double>(a)) * far_I(d, n, m + a, l1min);
  if (a >= 2) {
    Interval c = Interval(static_cast<double>(a) * (a - 1.0)) / Interval(2.0 * d);
    w = w + c * far_I(d, n, m + a - 2, std::max(0, l1min - 2));
  }
  return hull0(w);
}

// sum_y |y|^2 C^{*n1}(y) (D^{*l} * C^{*n2})(t-y) by the critical-Green
// identity; n2 = 0 is allowed (pure D-power on the unweighted side).
Interval wcx(Dim d, int n1, int n2, int l, const Key& t) {
  const GreenTable& gt = green_table(d);
  if (n1 + n2 + 2 > gt.nmax() || 2 * (n1 + n2 + 2) >= static_cast<int>(d))
    throw std::runtime_error("mix: weighted chain outside table range");
  Interval g = gamma_crit(d);
  Interval w = Interval(static_cast<double>(n1)) * g * green_I(d, n1 + n2 + 1, l + 1, t);
  Interval c = Interval(n1 * (n1 + 1.0)) * g * g / Interval(2.0 * d);
  Interval inner =
      green_I(d, n1 + n2 + 2, l, t) -
      d2_conv(d, t, [&](const Key& k) { return green_I(d, n1 + n2 + 2, l, k); });
  return w - c * inner;
}

Interval wcx_far(Dim d, int n1, int n2, int l, int l1min) {
  const GreenTable& gt = green_table(d);
  if (n1 + n2 + 2 > gt.nmax() || 2 * (n1 + n2 + 2) >= static_cast<int>(d))
    throw std::runtime_error("mix: weighted chain outside table range");
  Interval g = gamma_crit(d);
  Interval w = Interval(static_cast<double>(n1)) * g * far_I(d, n1 + n2 + 1, l + 1, l1min);
  Interval c = Interval(n1 * (n1 + 1.0)) * g * g / Interval(2.0 * d);
  w = w + c * far_I(d, n1 + n2 + 2, l, std::max(0, l1min - 2));
  return hull0(w);
}

// weighted Green-integral atom I_{n1,m1} against (n2,m2) (n2 = 0 means a
// plain D-power). For m1 > 0 the weight splits one-sidedly across the
// convolution: |u+v|^2 <= 2|u|^2 + 2|v|^2.
Interval wII(Dim d, int n1, int m1, int n2, int m2, const Key& t) {
  Interval coef(1.0);
  int budget = std::max(0, 13 - key_norm1(t));
  if (m1 + m2 > budget) {
    int keep2 = std::max(0, budget - m1);
    if (m2 > keep2) {
      coef = coef * peel_ratio(d, m2 - keep2);
      m2 = keep2;
    }
    if (m1 > budget) {
      coef = coef * peel_ratio(d, m1 - budget);
      m1 = budget;
    }
  }
  if (m1 == 0) return hull0(coef * wcx(d, n1, n2, m2, t));
  Interval r = Interval(2.0) * wcx(d, n1, n2, m1 + m2, t) +
               Interval(2.0) * wpI(d, m1, n1 + n2, m2, t);
  return hull0(coef * r);
}

Interval wII_far(Dim d, int n1, int m1, int n2, int m2, int l1min) {
  Interval coef(1.0);
  if (m2 > kFarMCap) {
    coef = coef * peel_ratio(d, m2 - kFarMCap);
    m2 = kFarMCap;
  }
  if (m1 > kFarMCap) {
    coef = coef * peel_ratio(d, m1 - kFarMCap);
    m1 = kFarMCap;
  }
  if (m1 == 0) return hull0(coef * wcx_far(d, n1, n2, m2, l1min));
  Interval r = Interval(2.0) * wcx_far(d, n1, n2, m1 + m2, l1min) +
               Interval(2.0) * wpI_far(d, m1, n1 + n2, m2, l1min);
  return hull0(coef * r);
}

}  // namespace

Bnd mix_weighted_pair(Dim d, const Mix& a, const Mix& b, const Key& t) {
  Interval acc(0.0);
  for (int i = 1; i < static_cast<int>(a.pcoef.size()); ++i) {
    if (a.pcoef[i].hi <= 0.0) continue;
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j)
      if (b.pcoef[j].hi > 0.0) acc = acc + a.pcoef[i] * b.pcoef[j] * wpp(d, i, j, t);
    for (const auto& jp : b.iparts)
      acc = acc + a.pcoef[i] * jp.coef * wpI(d, i, jp.n, jp.m, t);
  }
  for (const auto& ip : a.iparts) {
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j)
      if (b.pcoef[j].hi > 0.0)
        acc = acc + ip.coef * b.pcoef[j] * wII(d, ip.n, ip.m, 0, j, t);
    for (const auto& jp : b.iparts)
      acc = acc + ip.coef * jp.coef * wII(d, ip.n, ip.m, jp.n, jp.m, t);
  }
  return Bnd::of(acc);
}

Bnd mix_weighted_pair_far(Dim d, const Mix& a, const Mix& b, int l1min) {
  Interval acc(0.0);
  for (int i = 1; i < static_cast<int>(a.pcoef.size()); ++i) {
    if (a.pcoef[i].hi <= 0.0) continue;
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j)
      if (b.pcoef[j].hi > 0.0)
        acc = acc + a.pcoef[i] * b.pcoef[j] * wpp_far(d, i, j, l1min);
    for (const auto& jp : b.iparts)
      acc = acc + a.pcoef[i] * jp.coef * wpI_far(d, i, jp.n, jp.m, l1min);
  }
  for (const auto& ip : a.iparts) {
    for (int j = 0; j < static_cast<int>(b.pcoef.size()); ++j)
      if (b.pcoef[j].hi > 0.0)
        acc = acc + ip.coef * b.pcoef[j] * wII_far(d, ip.n, ip.m, 0, j, l1min);
    for (const auto& jp : b.iparts)
      acc = acc + ip.coef * jp.coef * wII_far(d, ip.n, ip.m, jp.n, jp.m, l1min);
  }
  return Bnd::of(acc);
}

Bnd mix_weighted_sup(Dim d, const Mix& a, const Mix& b, int scan_radius) {
  Bnd best = mix_weighted_pair_far(d, a, b, scan_radius + 1);
  for (const Key& k : keys_in_ball(scan_radius)) {
    Bnd v = mix_weighted_pair(d, a, b, k);
    if (v.v > best.v) best = v;
  }
  return best;
}

// ---------------------------------------------------------------------------
// aggregated blocks
// ---------------------------------------------------------------------------

namespace {

struct Ctx {
  const BootstrapParams& p;
  GBoundFamily gb;
  Dim d;
  Mix gt, gt1, gt2, gt3, gte1;
  Mix cv11;   // gt1 * gt1
  Mix cv1g;   // gt1 * gt
  Mix cvgg;   // gt * gt
  Mix cv21;   // gt2 * gt1
  Mix t110;   // exact-1 * floor-1 * free   (one-bond start, closed variants)
  Mix t200;   // floor-2 * free * free

  explicit Ctx(const BootstrapParams& pp)
      : p(pp), gb(make_gbounds(pp)), d(pp.d) {
    gt = mix_gtilde(gb, 0);
    gt1 = mix_gtilde(gb, 1);
    gt2 = mix_gtilde(gb, 2);
    gt3 = mix_gtilde(gb, 3);
    gte1 = mix_gtilde(gb, 1, true);
    cv11 = mix_convolve(d, gt1, gt1);
    cv1g = mix_convolve(d, gt1, gt);
    cvgg = mix_convolve(d, gt, gt);
    cv21 = mix_convolve(d, gt2, gt1);
    t110 = mix_convolve(d, mix_convolve(d, gte1, gt1), gt);
    t200 = mix_convolve(d, mix_convolve(d, gt2, gt), gt);
  }

  Mix cv(const Mix& a, const Mix& b) const { return mix_convolve(d, a, b); }
  Bnd ev(const Mix& m, const Key& k) const { return mix_eval(d, m, k); }
  Bnd at0(const Mix& m) const { return mix_eval(d, m, origin_key()); }
};

Bnd up_sum(std::initializer_list<Bnd> xs) {
  Bnd r;
  for (const Bnd& x : xs) r = up_add(r, x);
  return r;
}

// Every aggregate is bounded by the independent product of its line bounds
// (joint avoidance between lines only removes configurations), which turns
// each case of the block displays into a mix convolution evaluated at the
// pinned corner, summed over everything else.
Mat5 a_matrix(const Ctx& cx) {
  const double td = 2.0 * cx.d;
  const Key k0 = origin_key();
  const Key e1 = key_of({1});
  Mat5 A{};

  // branch point at the origin: a floor-3 line out to a neighbour closed by
  // a single bond (2d equivalent directions)
  Bnd b31 = up_mul(Bnd(td), up_mul(cx.ev(cx.gt3, e1), cx.ev(cx.gte1, e1)));

  // backbone-closed row: pieces split over the branch-point position
  A[li(0)][li(0)] = up_sum({
      b31,
      up_mul(Bnd(2.0), cx.at0(cx.cv21)),
      cx.at0(cx.cv(cx.cv11, cx.gt1)),
  });
  {
    Mix m1e = cx.cv(cx.gt1, cx.gte1);
    A[li(0)][li(1)] = up_sum({
        b31,
        up_mul(Bnd(2.0), cx.at0(cx.cv(m1e, cx.gt1))),
        cx.at0(cx.cv(cx.cv(m1e, cx.gt1), cx.gt1)),
    });
    Mix ee = cx.cv(cx.gte1, cx.gte1);
    A[li(0)][li(-1)] = up_sum({
        cx.at0(cx.cv(ee, cx.gt2)),
        cx.at0(cx.cv(cx.cv(ee, cx.gt1), cx.gt1)),
        cx.at0(cx.cv(cx.cv(cx.cv(cx.gt2, cx.gte1), cx.gt), cx.gt)),
    });
  }
  A[li(0)][li(2)] = up_sum({
      cx.at0(cx.cv21),
      up_mul(Bnd(2.0), cx.at0(cx.cv(cx.cv21, cx.gt1))),
      cx.at0(cx.cv(cx.cv(cx.cv21, cx.gt1), cx.gt1)),
  });
  {
    Mix e2 = cx.cv(cx.gte1, cx.gt2);
    Mix s22 = cx.cv(cx.cv(cx.gt2, cx.gt2), cx.gt);
    A[li(0)][li(-2)] = up_sum({
        cx.at0(cx.cv(cx.cv(e2, cx.gt), cx.gt1)),
        cx.at0(s22),
        cx.at0(cx.cv(s22, cx.gt1)),
    });
  }

  // single-bond shared line: the bond prefactor pins the offset to a
  // neighbour exactly (all neighbours are equivalent)
  Mix q1 = cx.cv(cx.cv(cx.cv(cx.gt1, cx.gte1), cx.gt), cx.gt);
  Mix q2 = cx.cv(cx.cv(cx.cv(cx.gt1, cx.gt2), cx.gt), cx.gt);
  A[li(-1)][li(0)] = up_add(cx.at0(cx.t110), cx.ev(cx.t200, e1));
  A[li(-1)][li(-1)] = cx.ev(q1, e1);
  A[li(-1)][li(-2)] = cx.ev(q2, e1);

  // two-bond shared line: genuine sup over the offset
  A[li(-2)][li(0)] = mix_sup(cx.d, mix_add(cx.t110, cx.t200), kOffsetScan);
  A[li(-2)][li(-1)] = mix_sup(cx.d, q1, kOffsetScan);
  A[li(-2)][li(-2)] = mix_sup(cx.d, q2, kOffsetScan);

  // direction-reversal closures: columns +1,+2 from -1,-2 on the sup rows,
  // rows +1,+2 from -1,-2
  for (int l : {-1, -2}) {
    A[li(l)][li(1)] = A[li(l)][li(-1)];
    A[li(l)][li(2)] = A[li(l)][li(-2)];
  }
  for (int m = -2; m <= 2; ++m) {
    A[li(1)][li(m)] = A[li(-1)][li(m)];
    A[li(2)][li(m)] = A[li(-2)][li(m)];
  }
  return A;
}

Mat5 c_matrix(const Ctx& cx, Bnd& winf_out) {
  const Dim d = cx.d;
  const double td = 2.0 * cx.d;
  const Key e1 = key_of({1});
  const Key k0 = origin_key();

  // sup over all pins of sum_y |y|^2 G(y) (Gt * Gt)(y - t) and its variant
  // with a one-bond floor in the chain
  Bnd winf = mix_weighted_sup(d, cx.gt, cx.cvgg, kPinScan);
  Bnd w1inf = mix_weighted_sup(d, cx.gt, cx.cv1g, kPinScan);
  winf_out = winf;

  Mat5 C{};

  // row 0: weighted line starts at the origin
  Bnd c00 = up_add(up_mul(Bnd(2.0), mix_weighted_pair(d, cx.gt1, cx.gt2, k0)),
                   mix_weighted_pair(d, cx.gt1, cx.cv11, k0));
  Bnd c01 = up_add(up_mul(Bnd(2.0), mix_weighted_pair(d, cx.gt1, cx.gt1, e1)),
                   mix_weighted_pair(d, cx.gt1, cx.cv11, e1));
  C[li(0)][li(0)] = c00;
  C[li(0)][li(1)] = C[li(0)][li(-1)] = c01;
  C[li(0)][li(2)] = C[li(0)][li(-2)] = winf;

  // row -1: one-bond left line, offset pinned to a neighbour
  Bnd cm10 = up_add(up_mul(Bnd(2.0), mix_weighted_pair(d, cx.gt1, cx.gt1, k0)),
                    mix_weighted_pair(d, cx.gt1, cx.cv11, k0));
  C[li(-1)][li(0)] = cm10;
  C[li(-1)][li(1)] = C[li(-1)][li(-1)] = winf;
  C[li(-1)][li(2)] = C[li(-1)][li(-2)] = winf;

  // row -2
  C[li(-2)][li(0)] = winf;
  C[li(-2)][li(1)] = C[li(-2)][li(-1)] = winf;
  C[li(-2)][li(2)] = C[li(-2)][li(-2)] = winf;

  // row +1: weight distributed along the continued shared line
  {
    // near part: the exactly-one-bond first line pins x to a neighbour
    Bnd ge1 = mix_eval(d, cx.gte1, e1);
    Key k2 = key_of({2});
    Key k11 = key_of({1, 1});
    auto F = [&](const Key& k) {
      return up_add(mix_eval(d, cx.gt1, k), mix_eval(d, cx.cv1g, k));
    };
    Bnd part1 = up_mul(ge1, up_add(up_mul(Bnd(4.0), F(k2)),
                                   up_mul(Bnd(2.0 * (td - 2.0)), F(k11))));
    Bnd part2 = up_mul(Bnd(4.0), mix_weighted_pair(d, cx.gt1, cx.cv21, e1));
    C[li(1)][li(0)] = up_add(part1, part2);
  }
  C[li(1)][li(1)] = C[li(1)][li(-1)] =
      up_mul(Bnd(4.0), mix_weighted_pair(d, cx.gt, cx.cv1g, e1));
  C[li(1)][li(2)] = C[li(1)][li(-2)] = up_mul(Bnd(4.0), winf);

  // row +2
  C[li(2)][li(0)] = up_mul(Bnd(4.0), w1inf);
  C[li(2)][li(1)] = C[li(2)][li(-1)] = up_mul(Bnd(4.0), winf);
  C[li(2)][li(2)] = C[li(2)][li(-2)] = up_mul(Bnd(4.0), winf);

  return C;
}

}  // namespace

BlockSet assemble_blocks(const BootstrapParams& p) {
  Ctx cx(p);
  BlockSet bs;
  bs.A = a_matrix(cx);
  Bnd winf;
  bs.C = c_matrix(cx, winf);

  for (int m = -2; m <= 2; ++m) bs.Eclosed[li(m)] = bs.A[li(0)][li(m)];

  // open chain end: the left pair of the last block is pinned at a point, so
  // only the labels without a bond prefactor survive
  bs.Eopen[li(0)] = bs.Eclosed[li(0)];
  bs.Eopen[li(-2)] = bs.Eopen[li(2)] = up_add(cx.at0(cx.t110), cx.at0(cx.t200));
  bs.Eopen[li(-1)] = bs.Eopen[li(1)] = Bnd(0.0);

  if (p.model == Model::lattice_trees) {
    bs.P = bs.Eclosed;
  } else {
    bs.P = bs.Eclosed;  // extended with the nontrivial initial sausage below
  }

  for (int l = -2; l <= 2; ++l) bs.DeltaEnd[li(l)] = bs.C[li(l)][li(0)];

  // weighted initial block: the label-0 entry has a sharper direct form in
  // terms of the weighted two-point sums (the first step off the origin is
  // an explicit bond)
  {
    Interval c1 = Interval(4.0 * p.d) * p.mubar();
    Interval c2 = ipow(Interval(2.0 * p.d), 2) * p.mubar() * p.mu();
    bs.DeltaStart[li(0)] = up_add(
        Bnd::of(c1 * weighted_two_point_bound(p.d, p.Gamma2, 1, 1, true).as_interval()),
        Bnd::of(c2 * weighted_two_point_bound(p.d, p.Gamma2, 2, 2, true).as_interval()));
    for (int m : {-2, -1, 1, 2}) bs.DeltaStart[li(m)] = bs.C[li(0)][li(m)];
  }

  return bs;
}

// ---------------------------------------------------------------------------
// certified Neumann sums
// ---------------------------------------------------------------------------

Vec5 mat_vec(const Mat5& A, const Vec5& x) {
  Vec5 r{};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) r[i] = up_add(r[i], up_mul(A[i][j], x[j]));
  return r;
}

Vec5 vec_mat(const Vec5& x, const Mat5& A) {
  Vec5 r{};
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) r[j] = up_add(r[j], up_mul(x[i], A[i][j]));
  return r;
}

Mat5 mat_mul(const Mat5& A, const Mat5& B) {
  Mat5 r{};
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 5; ++k)
      for (int j = 0; j < 5; ++j) r[i][j] = up_add(r[i][j], up_mul(A[i][k], B[k][j]));
  return r;
}

Mat5 mat_add(const Mat5& A, const Mat5& B) {
  Mat5 r{};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) r[i][j] = up_add(A[i][j], B[i][j]);
  return r;
}

Bnd dot(const Vec5& a, const Vec5& b) {
  Bnd r;
  for (int i = 0; i < 5; ++i) r = up_add(r, up_mul(a[i], b[i]));
  return r;
}

GeomSeries geometric_sum(const Mat5& A, int terms) {
  GeomSeries gs;

  // scaling vector from double power iterations (any positive vector gives a
  // valid certificate; iteration just tightens theta)
  std::array<double, 5> w;
  w.fill(1.0);
  for (int it = 0; it < 40; ++it) {
    std::array<double, 5> nw{};
    double mx = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) nw[i] += A[i][j].v * w[j];
      mx = std::max(mx, nw[i]);
    }
    if (mx <= 0.0) break;
    for (int i = 0; i < 5; ++i) w[i] = nw[i] / mx;
  }
  {
    double mx = 0.0;
    for (double x : w) mx = std::max(mx, x);
    if (mx <= 0.0) mx = 1.0;
    for (double& x : w) x = std::max(x, 1e-9 * mx);
  }
  gs.w = w;

  // theta = max_i (A w)_i / w_i with upward rounding
  Bnd theta;
  for (int i = 0; i < 5; ++i) {
    Bnd row;
    for (int j = 0; j < 5; ++j) row = up_add(row, up_mul(A[i][j], Bnd(w[j])));
    Bnd q = up_div(row, w[i]);
    if (q.v > theta.v) theta = q;
  }
  gs.theta = theta.v;
  if (!(gs.theta < 1.0)) {
    gs.ok = false;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        gs.S1[i][j] = Bnd(1e300);
        gs.S2[i][j] = Bnd(1e300);
      }
    return gs;
  }

  Mat5 Ak{};
  for (int i = 0; i < 5; ++i) Ak[i][i] = Bnd(1.0);
  Mat5 S1{}, S2{};
  for (int k = 0; k < terms; ++k) {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        S1[i][j] = up_add(S1[i][j], Ak[i][j]);
        S2[i][j] = up_add(S2[i][j], up_mul(Bnd(static_cast<double>(k + 1)), Ak[i][j]));
      }
    Ak = mat_mul(Ak, A);
  }

  // entrywise tails: (A^K)_{ij} <= theta^K w_i / w_j
  Interval th(gs.theta, gs.theta);
  Interval one_m = Interval(1.0) - th;
  Interval t1 = ipow(th, terms) / one_m;
  Interval t2 = ipow(th, terms) * (Interval(terms + 1.0) * one_m + th) / (one_m * one_m);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      Interval scale = Interval(w[i]) / Interval(w[j]);
      gs.S1[i][j] = up_add(S1[i][j], Bnd::of(t1 * scale));
      gs.S2[i][j] = up_add(S2[i][j], Bnd::of(t2 * scale));
    }
  gs.ok = true;
  return gs;
}

}  // namespace noble
