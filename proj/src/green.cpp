#include "noble/green.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

namespace noble {
namespace {

using bf50 = boost::multiprecision::cpp_bin_float_50;

// Enclose a 50-digit value with an explicit absolute error. bin_float ops are
// not correctly rounded but are accurate to ~1 ulp (1e-49 relative); callers
// pass an abs_err that dominates their op count by many orders of magnitude.
Interval bf_enclose(const bf50& v, const bf50& abs_err) {
  bf50 lo = v - abs_err, hi = v + abs_err;
  double l = lo.convert_to<double>();
  double h = hi.convert_to<double>();
  l = std::nextafter(l, -std::numeric_limits<double>::infinity());
  h = std::nextafter(h, std::numeric_limits<double>::infinity());
  return Interval(l, h);
}

Interval cos_pi_frac(long num, long den) {
  bf50 th = boost::math::constants::pi<bf50>() * num / den;
  return bf_enclose(cos(th), bf50(1e-40));
}

constexpr int kNodes = 21;         // Clenshaw-Curtis points per panel (N = 20)
constexpr double kCutoff = 400.0;  // heat-time cutoff, envelope tail beyond
// f_0(u) <= kEnv / sqrt(u) for u >= 9:  on [0,pi/2] use
// 1-cos(t) >= (4/pi^2) t^2 (the quotient (1-cos t)/t^2 is decreasing), on
// [pi/2,pi] use 1-cos(t) >= 1, giving
// f_0(u) <= (1/2) sqrt(pi / ((4/pi^2) u)) / pi + e^{-u}/2
//        <= (0.4432 + sqrt(u) e^{-u}/2) / sqrt(u) <= 0.45 / sqrt(u).
constexpr double kEnv = 0.45;

// Clenshaw-Curtis weights on [-1,1] for kNodes points, exact cosine-sum
// formula for even N. All positive; their sum is 2.
std::vector<Interval> cc_weights() {
  const int N = kNodes - 1;
  static_assert(kNodes % 2 == 1, "even panel degree expected");
  std::vector<Interval> c(kNodes);
  c[0] = c[N] = Interval::ratio(1.0, double(N * N - 1));
  for (int j = 1; j < N; ++j) {
    Interval s(0.0);
    for (int m = 1; m <= N / 2 - 1; ++m)
      s += Interval::ratio(2.0, double(4 * m * m - 1)) *
           cos_pi_frac(2L * m * j % (2L * N), N);
    // cos(N theta_j) = cos(j pi) = +-1
    Interval last = Interval::ratio(j % 2 ? -1.0 : 1.0, double(N * N - 1));
    c[j] = Interval::ratio(2.0, double(N)) * (Interval(1.0) - s - last);
  }
  Interval tot(0.0);
  for (const auto& w : c) {
    if (w.lo < 0) throw std::logic_error("cc_weights: negative weight");
    tot += w;
  }
  if (!tot.contains(2.0)) throw std::logic_error("cc_weights: sum != 2");
  return c;
}

std::vector<std::pair<int, int>> key_groups(const Key& k) {
  std::vector<std::pair<int, int>> g;
  for (unsigned char b : k) {
    if (!g.empty() && g.back().first == int(b))
      ++g.back().second;
    else
      g.emplace_back(int(b), 1);
  }
  return g;
}

}  // namespace

Interval bessel_factor(int a, double u) {
  if (a < 0 || !(u >= 0) || !std::isfinite(u))
    throw std::invalid_argument("bessel_factor: bad arguments");
  if (u == 0.0) return a == 0 ? Interval(1.0) : Interval(0.0);
  const bf50 x = bf50(u) / 2;
  bf50 term = 1;
  for (int i = 1; i <= a; ++i) term *= x / i;  // x^a / a!
  bf50 sum = term;
  const bf50 x2 = x * x;
  bf50 tail = 0;
  for (int j = 1;; ++j) {
    term *= x2 / j / (a + j);
    sum += term;
    // once the term ratio r is < 1/2 the rest is dominated by a geometric
    // series: rest <= term * r / (1 - r) <= term
    bf50 r = x2 / ((j + 1) * bf50(a + j + 1));
    if (r < bf50(0.5) && term < sum * bf50(1e-55)) {
      tail = term;
      break;
    }
    if (j > 500000) throw std::runtime_error("bessel_factor: divergence");
  }
  const bf50 em = exp(bf50(-u));
  const bf50 v = sum * em;
  // op count here is < 1e6 at <= 1e-45 relative error each
  return bf_enclose(v, v * bf50(1e-38) + tail * em);
}

// ---------------------------------------------------------------------------
// SrwPolyTable

SrwPolyTable::SrwPolyTable(Dim d, int Lmax, int radius)
    : d_(d), Lmax_(Lmax), radius_(radius) {
  if (d < 1 || Lmax < 0 || radius < 0)
    throw std::invalid_argument("SrwPolyTable: bad arguments");
  p_.resize(Lmax + 1);
  shell_.resize(Lmax + 1);
  SparseField<cpp_int> cur;
  cur.add(origin_key(), 1);
  cpp_int denom = 1;  // (2d)^m
  for (int m = 0;; ++m) {
    shell_[m].assign(m + 1, Interval(0.0));
    std::vector<std::pair<Key, Interval>> vals;
    for (const auto& [k, c] : cur.m) {
      Interval pv = enclose(cpp_rat(c, denom));
      shell_[m][key_norm1(k)] = imax(shell_[m][key_norm1(k)], pv);
      if (key_norm1(k) <= radius) vals.emplace_back(k, pv);
    }
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    p_[m] = std::move(vals);
    if (m == Lmax) break;
    cur = step_gather_exact(cur, d);
    denom *= 2 * d;
  }
}

Interval SrwPolyTable::at(int m, const Key& x) const {
  if (m < 0) return Interval(0.0);
  if (m > Lmax_) throw std::out_of_range("SrwPolyTable::at: m beyond table");
  if (key_norm1(x) > m) return Interval(0.0);
  if (key_norm1(x) > radius_)
    throw std::out_of_range("SrwPolyTable::at: x beyond table radius");
  const auto& v = p_[m];
  auto it = std::lower_bound(
      v.begin(), v.end(), x,
      [](const auto& a, const Key& b) { return a.first < b; });
  if (it == v.end() || it->first != x) return Interval(0.0);  // parity holes
  return it->second;
}

Interval SrwPolyTable::sup_from(int m, int l1min) const {
  if (m < 0 || l1min > m) return Interval(0.0);
  if (m > Lmax_) throw std::out_of_range("SrwPolyTable::sup_from: m beyond table");
  Interval best(0.0);
  for (int l = std::max(0, l1min); l <= m; ++l)
    best = imax(best, shell_[m][l]);
  return best;
}

const SrwPolyTable& srw_table(Dim d) {
  static std::mutex mu;
  static std::map<Dim, std::unique_ptr<SrwPolyTable>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& p = cache[d];
  if (!p) p = std::make_unique<SrwPolyTable>(d);
  return *p;
}

// ---------------------------------------------------------------------------
// nbw_shell_poly

std::vector<cpp_int> nbw_shell_poly(Dim d, int n) {
  if (d < 1 || n < 0) throw std::invalid_argument("nbw_shell_poly");
  std::vector<cpp_int> prev{cpp_int(1)};  // c_0 = p_0
  if (n == 0) return prev;
  std::vector<cpp_int> cur{cpp_int(0), cpp_int(2 * d)};  // c_1 = 2d p_1
  for (int k = 1; k < n; ++k) {
    // c_{k+1} = 2d D*c_k - w c_{k-1}; the one-step walk has its single
    // backtrack killed outright (w = 2d), longer walks lose 2d-1 extensions
    cpp_int w = (k == 1) ? cpp_int(2 * d) : cpp_int(2 * d - 1);
    std::vector<cpp_int> nxt(k + 2, cpp_int(0));
    for (int i = 0; i <= k; ++i) nxt[i + 1] += 2 * d * cur[i];
    for (int i = 0; i < int(prev.size()); ++i) nxt[i] -= w * prev[i];
    prev = std::move(cur);
    cur = std::move(nxt);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// GreenTable

GreenTable::GreenTable(Dim d, int nmax, int radius)
    : d_(d), nmax_(std::min(nmax, (d - 1) / 2)), radius_(radius) {
  if (d < 5 || radius < 1 || nmax < 1)
    throw std::invalid_argument("GreenTable: bad arguments");
  cw_ = cc_weights();
  tail_.assign(nmax_ + 1, Interval(0.0));
  qerr_.assign(nmax_ + 1, Interval(0.0));

  // panel layout: [0,1] uniform, then geometric up to the cutoff
  std::vector<std::pair<double, double>> seg;
  for (int i = 0; i < 10; ++i) seg.push_back({0.1 * i, 0.1 * (i + 1)});
  double lo = 1.0;
  while (lo < kCutoff) {
    double hi = std::min(lo * 1.1, kCutoff);
    if (kCutoff - hi < 1e-9) hi = kCutoff;
    seg.push_back({lo, hi});
    lo = hi;
  }

  const int N = kNodes - 1;
  panels_.reserve(seg.size());
  fa_.reserve(seg.size() * kNodes);
  f0pow_.reserve(seg.size() * kNodes);
  jlo_ = std::max(0, d_ - radius_);
  for (auto [a, b] : seg) {
    Panel P;
    P.a = a;
    P.b = b;
    P.f0_at_a = bessel_factor(0, a);
    P.f0_half_at_a = bessel_factor(0, 0.5 * a);
    P.u.resize(kNodes);
    for (int j = 0; j <= N; ++j) {
      double uj = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(j * M_PI / N);
      P.u[j] = std::clamp(uj, a, b);
      std::vector<Interval> row(radius_ + 1);
      for (int q = 0; q <= radius_; ++q) row[q] = bessel_factor(q, P.u[j]);
      // monotonicity in the order backs the coordinatewise-monotone envelope
      for (int q = 0; q + 1 <= radius_; ++q)
        if (row[q].lo < row[q + 1].lo - 1e-300)
          throw std::logic_error("bessel order monotonicity violated");
      std::vector<Interval> pw(d_ - jlo_ + 1);
      pw[0] = ipow(row[0], jlo_);
      for (int e = 1; e < int(pw.size()); ++e) pw[e] = pw[e - 1] * row[0];
      fa_.push_back(std::move(row));
      f0pow_.push_back(std::move(pw));
    }
    panels_.push_back(std::move(P));
  }

  // evaluation keys: |x|_1 <= radius with at most d nonzero coordinates
  for (const Key& k : keys_in_ball(radius_)) {
    if (int(k.size()) > d_) continue;
    ball_.emplace_back(k, key_groups(k));
  }
}

// |F^{(q)}(u)| on [a,b] for F = prod_mu f_{|x_mu|}, any x. Two lanes:
//   (2d)^q f_0(a)^d             from |f_b^{(j)}| <= 2^j f_0(u), and
//   q! C(q+d-1,d-1) (2/a)^q f_0(a/2)^d
// from |f_b^{(j)}(u)| <= j! (2/u)^j f_0(u/2) (peel half the heat kernel off
// (1-cos)^j e^{-u(1-cos)} and maximize the rest pointwise).
double GreenTable::deriv_bound(int q, const Panel& P) const {
  Interval b1 = ipow(Interval(2.0 * d_), q) * ipow(P.f0_at_a, d_);
  if (P.a <= 0.0) return b1.hi;
  Interval t(1.0), bin(1.0);
  for (int i = 1; i <= q; ++i) {
    t *= Interval(double(i));
    bin *= Interval::ratio(double(d_ - 1 + i), double(i));
  }
  Interval b2 = t * bin * ipow(Interval(2.0) / Interval(P.a), q) *
                ipow(P.f0_half_at_a, d_);
  return std::min(b1.hi, b2.hi);
}

const std::unordered_map<Key, Interval>& GreenTable::field(int n, int m) const {
  std::lock_guard<std::mutex> lk(mu_);
  struct Rec {
    const GreenTable* t;
    const std::unordered_map<Key, Interval>& operator()(int n, int m) const {
      auto it = t->fields_.find({n, m});
      if (it != t->fields_.end()) return it->second;
      if (n < 1 || n > t->nmax_ || m < 0 || m > t->radius_)
        throw std::out_of_range("GreenTable: index outside table");
      if (m == 0) {
        t->build_base(n);
        return t->fields_.at({n, 0});
      }
      const auto& prev = (*this)(n, m - 1);
      std::unordered_map<Key, Interval> f;
      Interval inv2d = Interval::ratio(1.0, 2.0 * t->d_);
      for (const auto& [k, grp] : t->ball_) {
        if (key_norm1(k) > t->radius_ - m) continue;
        Interval acc(0.0);
        for (const auto& [k2, c] : neighbor_transitions(k, t->d_))
          acc += prev.at(k2) * Interval(double(c));
        f.emplace(k, acc * inv2d);
      }
      auto [it2, fresh] = t->fields_.emplace(std::pair<int, int>{n, m}, std::move(f));
      (void)fresh;
      return it2->second;
    }
  } rec{this};
  return rec(n, m);
}

void GreenTable::build_base(int n) const {
  // One certified remainder per panel covers every x: interpolation error of
  // the 21-point scheme plus the node-rounding slack, both via deriv_bound.
  const int K = kNodes;
  Interval hfac_den(1.0);
  for (int i = 1; i <= K; ++i) hfac_den *= Interval(double(i));
  hfac_den *= ipow(Interval(2.0), 2 * K - 1);

  Interval qerr(0.0);
  for (const auto& P : panels_) {
    double h = P.b - P.a;
    // Leibniz bound for G = u^{n-1} F
    auto gk = [&](int q) {
      Interval s(0.0), binq(1.0), fall(1.0);
      for (int i = 0; i <= std::min(q, n - 1); ++i) {
        if (i > 0) {
          binq *= Interval::ratio(double(q - i + 1), double(i));
          fall *= Interval(double(n - i));
        }
        s += binq * fall * ipow(Interval(P.b), n - 1 - i) *
             Interval(deriv_bound(q - i, P));
      }
      return s.hi;
    };
    Interval rem = Interval(2.0) * ipow(Interval(h), K + 1) * Interval(gk(K)) / hfac_den;
    // nodes are rounded to double; certified weights applied at shifted nodes
    Interval node = Interval(h) * Interval(gk(1)) * Interval((P.b + 1.0) * 4e-15);
    qerr += rem + node;
  }
  qerr_[n] = qerr;

  // envelope tail: int_T^oo u^{n-1} (kEnv/sqrt(u))^d du, needs 2n < d
  if (2 * n >= d_) throw std::logic_error("GreenTable: divergent index");
  Interval tl = ipow(Interval(kEnv), d_) *
                (Interval(1.0) / isqrt(ipow(Interval(kCutoff), d_ - 2 * n))) *
                Interval::ratio(2.0, double(d_ - 2 * n));
  tail_[n] = tl;

  double dn = 1, fact = 1;
  for (int i = 0; i < n; ++i) dn *= d_;        // exact: d^n < 2^53
  for (int i = 2; i < n; ++i) fact *= i;       // (n-1)!
  Interval pref = Interval::ratio(dn, fact);

  std::unordered_map<Key, Interval> out;
  out.reserve(ball_.size());
  std::vector<Interval> upow(panels_.size() * kNodes);
  for (std::size_t i = 0; i < upow.size(); ++i) {
    double u = panels_[i / kNodes].u[i % kNodes];
    upow[i] = ipow(Interval(u), n - 1);
  }
  for (const auto& [key, groups] : ball_) {
    int rtot = 0;
    for (const auto& [mag, mult] : groups) rtot += mult;
    Interval acc(0.0);
    std::size_t base = 0;
    for (const auto& P : panels_) {
      Interval psum(0.0);
      for (int j = 0; j < kNodes; ++j) {
        Interval prod = f0pow_[base + j][d_ - rtot - jlo_];
        for (const auto& [mag, mult] : groups)
          prod *= ipow(fa_[base + j][mag], mult);
        psum += cw_[j] * (prod * upow[base + j]);
      }
      acc += psum * Interval(0.5 * (P.b - P.a));
      base += kNodes;
    }
    acc += Interval(-qerr.hi, qerr.hi) + Interval(0.0, tail_[n].hi);
    acc *= pref;
    if (acc.hi < 0) throw std::logic_error("GreenTable: negative integral");
    out.emplace(key, Interval(std::max(acc.lo, 0.0), acc.hi));
  }
  fields_.emplace(std::pair<int, int>{n, 0}, std::move(out));
}

Interval GreenTable::I(int n, int m, const Key& x) const {
  const auto& f = field(n, m);
  auto it = f.find(x);
  if (it == f.end())
    throw std::out_of_range("GreenTable::I: point outside table radius");
  return it->second;
}

Interval GreenTable::sup_all(int n, int m) const {
  // even m: the transform D^m C^n is nonnegative, so the maximum sits at 0;
  // odd m: one averaging step bounds it by the level below
  return I(n, m - (m % 2), origin_key());
}

Interval GreenTable::weighted_chain(int n, int nprime, int l, const Key& x) const {
  int n1 = n + nprime + 1, n2 = n + nprime + 2;
  if (n < 1 || nprime < 0 || l < 0 || n2 > nmax_)
    throw std::invalid_argument("weighted_chain: index out of range");
  if (key_norm1(x) + 2 + l > radius_)
    throw std::out_of_range("weighted_chain: point too far out");
  Interval t1 = Interval(double(n)) * I(n1, l + 1, x);
  LatticePoint x0 = key_point(x, d_);
  std::map<Key, long long> sh;
  for (int s = 0; s < d_; ++s)
    for (int sgn : {+2, -2}) {
      auto c = x0.c;
      c[s] += sgn;
      ++sh[canonicalize(c)];
    }
  Interval ssum(0.0);
  for (const auto& [k2, c] : sh) ssum += I(n2, l, k2) * Interval(double(c));
  Interval bracket = I(n2, l, x) - Interval::ratio(1.0, 2.0 * d_) * ssum;
  Interval res = t1 - Interval::ratio(double(n) * (n + 1), 2.0 * d_) * bracket;
  // the sum it evaluates is nonnegative
  return Interval(std::max(res.lo, 0.0), std::max(res.hi, 0.0));
}

const GreenTable& green_table(Dim d) {
  static std::mutex mu;
  static std::map<Dim, std::unique_ptr<GreenTable>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& p = cache[d];
  if (!p) p = std::make_unique<GreenTable>(d);
  return *p;
}

}  // namespace noble
