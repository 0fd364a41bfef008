#include "noble/diagrams.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace noble {

const std::array<WeightedIndex, 10>& weighted_index_set() {
  static const std::array<WeightedIndex, 10> s = {{{1, 0, false},
                                                   {1, 1, false},
                                                   {1, 2, false},
                                                   {1, 3, false},
                                                   {1, 6, true},
                                                   {2, 0, false},
                                                   {2, 1, false},
                                                   {2, 2, false},
                                                   {2, 3, false},
                                                   {2, 6, true}}};
  return s;
}

Interval BootstrapParams::mubar() const { return Gamma1 / double(2 * d - 1); }
Interval BootstrapParams::mu() const {
  return Gamma1 / (Interval(c_mu) * double(2 * d - 1));
}
Interval BootstrapParams::g() const { return euler() * Gamma1; }
Interval BootstrapParams::giota() const { return euler() * Gamma1 / c_mu; }
Interval BootstrapParams::r2d() const {
  return Interval::ratio(2.0 * d, 2.0 * d - 1);
}

std::string BootstrapParams::cache_key() const {
  std::ostringstream os;
  os << (model == Model::lattice_trees ? "lt" : "la") << ':' << d << ':'
     << (mode == BoundMode::exact ? 'e' : 'm') << ':' << M << ':'
     << std::hexfloat << Gamma1.lo << ',' << Gamma1.hi << ';' << Gamma2.lo
     << ',' << Gamma2.hi << ';' << Gamma3.lo << ',' << Gamma3.hi << ';'
     << c_mu;
  for (double c : c3) os << ',' << c;
  return os.str();
}

// ---------------------------------------------------------------------------
// Anchored composite walks.
// ---------------------------------------------------------------------------
namespace {

constexpr int kPathLen = 9;
constexpr int kCircLen = 10;

cpp_int falling(Dim d, int k) {
  cpp_int f = 1;
  for (int i = 0; i < k; ++i) f *= (d - i);
  return f;
}

WalkKind model_kind(Model m) {
  // tree sausage-paths are vertex-self-avoiding and mutually avoiding, so
  // their composites are plain self-avoiding walks; animal sausages may carry
  // cycles, which only the bond version survives
  return m == Model::lattice_trees ? WalkKind::SAW : WalkKind::BOND_SAW;
}

// Composite walks mix pinned anchor axes with fresh ones: a length-9 walk can
// touch 9 fresh axes on top of up to 6 pinned ones, so positions pack into a
// 128-bit code (16 axes, 5 bits each).
constexpr int kCompAxes = 16;
constexpr int kMaxLines = 5;
using CompPos = std::array<int8_t, kCompAxes>;
using u128 = unsigned __int128;

u128 comp_code(const CompPos& p) {
  u128 c = 0;
  for (int i = 0; i < kCompAxes; ++i) c = (c << 5) | unsigned(p[i] + 16);
  return c;
}

struct CompositeDfs {
  bool bond = false;
  Dim d = 0;
  int Lmax = 0, r = 0, pinned = 0;
  std::vector<LineConstraint> lines;
  std::vector<std::optional<CompPos>> corner;
  std::vector<cpp_int>* counts = nullptr;

  CompPos pos{};
  int extra = 0;
  bool closes_at_origin = false;
  std::vector<u128> codes;
  std::vector<std::pair<u128, u128>> bonds;
  std::array<cpp_int, kCircLen + 1> lift;  // (d-pinned)_k 2^k per extra axis k

  using Dp = std::array<long long, (kMaxLines + 1) * (kCircLen + 1)>;
  static int at(int j, int s) { return j * (kCircLen + 1) + s; }

  void run() {
    codes.assign(1, comp_code(pos));
    for (int k = 0; k <= kCircLen; ++k)
      lift[k] = falling(d - pinned, k) * (cpp_int(1) << k);
    closes_at_origin = corner.back() && comp_code(*corner.back()) == codes[0];
    Dp dp{};
    dp[at(0, 0)] = 1;
    dfs(0, dp);
  }

  bool can_advance(int j, int s) const {
    if (lines[j].exact ? s != lines[j].l : s < lines[j].l) return false;
    if (!corner[j]) return true;
    return std::memcmp(pos.data(), corner[j]->data(), kCompAxes) == 0;
  }

  void dfs(int L, Dp dp) {
    for (int j = 0; j < r; ++j)
      for (int s = 0; s <= L; ++s)
        if (dp[at(j, s)] && can_advance(j, s)) dp[at(j + 1, 0)] += dp[at(j, s)];
    if (long long done = dp[at(r, 0)]) {
      (*counts)[L] += cpp_int(done) * lift[extra];
      dp[at(r, 0)] = 0;
    }
    // once a vertex-self-avoiding composite has closed on the origin it
    // cannot extend any further
    if (!bond && closes_at_origin && L > 0 && codes[L] == codes[0]) return;
    if (L == Lmax) return;
    bool live = false;
    for (int j = 0; j < r && !live; ++j)
      for (int s = 0; s <= L && !live; ++s)
        live = dp[at(j, s)] && (!lines[j].exact || s < lines[j].l);
    if (!live) return;
    if (corner[r - 1]) {
      int dist = 0;
      for (int i = 0; i < kCompAxes; ++i) {
        int e = pos[i] - (*corner[r - 1])[i];
        dist += e < 0 ? -e : e;
      }
      if (dist > Lmax - L) return;
    }
    int axes = pinned + extra;
    int cap = std::min({kCompAxes, pinned + (Lmax - L), (int)d});
    int nmoves = 2 * axes + (axes < cap ? 1 : 0);
    for (int m = 0; m < nmoves; ++m) {
      int axis = m >> 1;
      int8_t step = (m & 1) ? -1 : 1;
      bool fresh = axis == axes;
      pos[axis] += step;
      u128 nc = comp_code(pos);
      bool ok = true;
      if (bond) {
        std::pair<u128, u128> b = std::minmax(codes[L], nc);
        for (auto& e : bonds)
          if (e == b) {
            ok = false;
            break;
          }
        if (ok) bonds.push_back(b);
      } else {
        for (int i = closes_at_origin ? 1 : 0; i <= L && ok; ++i)
          ok = codes[i] != nc;
      }
      if (ok) {
        Dp nd{};
        bool any = false;
        for (int j = 0; j < r; ++j)
          for (int s = 0; s <= L; ++s)
            if (long long w = dp[at(j, s)]) {
              if (lines[j].exact && s >= lines[j].l) continue;
              nd[at(j, s + 1)] = w;
              any = true;
            }
        if (any) {
          if (fresh) ++extra;
          codes.push_back(nc);
          dfs(L + 1, nd);
          codes.pop_back();
          if (fresh) --extra;
        }
        if (bond) bonds.pop_back();
      }
      pos[axis] -= step;
    }
  }
};

CompPos to_comp_pos(std::vector<int> c) {
  while (!c.empty() && c.back() == 0) c.pop_back();
  // leave room for one fresh axis per possible step
  if ((int)c.size() > kCompAxes - kCircLen)
    throw std::invalid_argument("corner support too wide");
  CompPos p{};
  for (int i = 0; i < (int)c.size(); ++i) {
    if (c[i] < -12 || c[i] > 12) throw std::invalid_argument("corner too far");
    p[i] = (int8_t)c[i];
  }
  return p;
}

}  // namespace

namespace {
// the counts are exact integers independent of any walk weights, so they are
// shared across all parameter points that ask for the same shape
std::string composite_key(WalkKind kind, Dim d,
                          const std::vector<LineConstraint>& lines,
                          const std::vector<std::optional<std::vector<int>>>& corners,
                          int Lmax) {
  std::string k;
  k.reserve(64);
  k += (kind == WalkKind::BOND_SAW) ? 'b' : 's';
  k += std::to_string(d);
  k += '/';
  k += std::to_string(Lmax);
  for (size_t j = 0; j < lines.size(); ++j) {
    k += lines[j].exact ? '=' : '>';
    k += std::to_string(lines[j].l);
    k += ':';
    if (corners[j]) {
      for (int c : *corners[j]) {
        k += std::to_string(c);
        k += ',';
      }
    } else {
      k += '*';
    }
  }
  return k;
}
}  // namespace

std::vector<cpp_int> composite_counts(
    WalkKind kind, Dim d, const std::vector<LineConstraint>& lines,
    const std::vector<std::optional<std::vector<int>>>& corners, int Lmax) {
  if (lines.empty() || lines.size() > kMaxLines)
    throw std::invalid_argument("composite needs 1..5 lines");
  if (corners.size() != lines.size())
    throw std::invalid_argument("one corner per line");
  if (Lmax > kCircLen) throw std::invalid_argument("composite length cap");
  CompositeDfs D;
  D.bond = kind == WalkKind::BOND_SAW;
  if (kind != WalkKind::SAW && kind != WalkKind::BOND_SAW)
    throw std::invalid_argument("composites cover self-avoiding kinds only");
  D.d = d;
  D.Lmax = std::max(Lmax, 0);
  D.r = (int)lines.size();
  D.lines = lines;
  for (int j = 0; j < D.r; ++j)
    if (lines[j].l < 0)
      throw std::invalid_argument("line " + std::to_string(j + 1) +
                                  ": negative length floor");
  int pinned = 0;
  for (auto& c : corners)
    if (c)
      for (int i = 0; i < (int)c->size(); ++i)
        if ((*c)[i]) pinned = std::max(pinned, i + 1);
  D.pinned = pinned;
  if (d < pinned) throw std::invalid_argument("corner support exceeds dimension");
  for (auto& c : corners)
    D.corner.push_back(c ? std::optional<CompPos>(to_comp_pos(*c))
                         : std::nullopt);

  static std::mutex memo_mu;
  static std::map<std::string, std::vector<cpp_int>> memo;
  const std::string key = composite_key(kind, d, lines, corners, Lmax);
  {
    std::lock_guard<std::mutex> lk(memo_mu);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
  }
  std::vector<cpp_int> counts(D.Lmax + 1);
  D.counts = &counts;
  D.run();
  {
    std::lock_guard<std::mutex> lk(memo_mu);
    memo.emplace(key, counts);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Line bounds.
// ---------------------------------------------------------------------------

Interval far_green_sup(Dim d, int n, int m, int l1min) {
  const GreenTable& G = green_table(d);
  int t = std::max(l1min - m, 0);
  t = std::min(t, G.radius());
  Interval best(0.0);
  for (const Key& k : keys_in_ball(t))
    if (key_norm1(k) == t) best = imax(best, G.I(n, 0, k));
  return best;
}

namespace {
// enclosure of I_{n,m}(x) that stays valid past the table radius (the far
// branch only knows the value is between 0 and the shell envelope)
Interval green_at(Dim d, int n, int m, const Key& x) {
  const GreenTable& G = green_table(d);
  if (key_norm1(x) + m <= G.radius()) return G.I(n, m, x);
  return Interval(0.0, far_green_sup(d, n, m, key_norm1(x)).hi);
}
}  // namespace

Bnd LineBound::eval(Dim d, const Key& x) const {
  Interval v = walk.get(x);
  for (auto& kp : kparts) v = v + kp.coef * green_at(d, kp.n, kp.m, x);
  return Bnd{std::max(v.hi, 0.0)};
}

Bnd LineBound::sup_far(Dim d, int l1min) const {
  Interval v(0.0);
  for (auto& [k, w] : walk.m)
    if (key_norm1(k) >= l1min) v = imax(v, w);
  for (auto& kp : kparts) v = v + kp.coef * far_green_sup(d, kp.n, kp.m, l1min);
  return Bnd{std::max(v.hi, 0.0)};
}

Interval LineBound::walk_total(Dim d) const { return field_total(walk, d); }

Bnd pair_at_origin(const LineBound& a, const LineBound& b, Dim d) {
  const GreenTable& G = green_table(d);
  Interval v(0.0);
  for (auto& [k, wa] : a.walk.m) {
    Interval row = b.walk.get(k);
    for (auto& kp : b.kparts) row = row + kp.coef * green_at(d, kp.n, kp.m, k);
    if (row.hi != 0.0 || row.lo != 0.0) v = v + orbit_size(k, d) * wa * row;
  }
  for (auto& kp : a.kparts) {
    for (auto& [k, wb] : b.walk.m)
      v = v + orbit_size(k, d) * wb * kp.coef * green_at(d, kp.n, kp.m, k);
    for (auto& kq : b.kparts) {
      if (kp.n + kq.n > G.nmax())
        throw std::invalid_argument("tail pairing exceeds Green power table");
      v = v + kp.coef * kq.coef * G.I(kp.n + kq.n, kp.m + kq.m, origin_key());
    }
  }
  return Bnd{std::max(v.hi, 0.0)};
}

// ---------------------------------------------------------------------------
// Two-point bounds under the bootstrap assumption.
// ---------------------------------------------------------------------------

LineBound GBoundFamily::gtilde_line(int l, bool exact_len) const {
  if (p.M < 2 || p.M > kPathLen + 1)
    throw std::invalid_argument("explicit depth M out of range");
  LineBound b;
  Interval step = p.step();
  int lo = std::max(l, 0);
  int hi = exact_len ? std::min(lo, p.M - 1) : p.M - 1;
  if (lo <= hi) {
    WalkTable T = count_walks(model_kind(p.model), p.d, hi);
    for (int i = lo; i <= hi; ++i) {
      Interval wi = ipow(step, i);
      for (auto& [k, c] : T.c[i].m) b.walk.add(k, enclose(c) * wi);
    }
  }
  if (!exact_len || lo >= p.M)
    b.kparts.push_back(
        {ipow(p.r2d() * p.Gamma1, p.M) * p.Gamma2, 1, p.M});
  return b;
}

LineBound GBoundFamily::gbar_line() const {
  LineBound b = gtilde_line(0, false);
  for (auto& [k, w] : b.walk.m) w = w * giota;
  for (auto& kp : b.kparts) kp.coef = kp.coef * giota;
  b.walk.m[origin_key()] = g;  // at 0 the line is the one-point function
  return b;
}

Bnd GBoundFamily::gtilde(const Key& x, int l, bool exact_len) const {
  return gtilde_line(l, exact_len).eval(p.d, x);
}

Bnd GBoundFamily::gbar(const Key& x) const { return gbar_line().eval(p.d, x); }

GBoundFamily make_gbounds(const BootstrapParams& p) {
  GBoundFamily f;
  f.p = p;
  f.mu = p.mu();
  f.mubar = p.mubar();
  f.g = p.g();
  f.giota = p.giota();
  Interval ge = f.gtilde_line(1, false).eval(p.d, key_of({1})).as_interval();
  if (ge.hi >= 1.0)
    throw std::domain_error("two-point bound at a neighbor reaches 1");
  f.beta = 1.0 / (1.0 - Interval(0.0, ge.hi));
  return f;
}

// ---------------------------------------------------------------------------
// Repulsive diagrams.
// ---------------------------------------------------------------------------
namespace {

// number of length assignments of the extracted lines with total <= budget
long long prefix_assignments(const std::vector<LineConstraint>& lines, int m,
                             int budget) {
  if (budget < 0) return 0;
  if (m == 0) return 1;
  long long n = 0;
  if (lines[0].exact)
    return lines[0].l <= budget
               ? prefix_assignments({lines.begin() + 1, lines.end()}, m - 1,
                                    budget - lines[0].l)
               : 0;
  for (int i = lines[0].l; i <= budget; ++i)
    n += prefix_assignments({lines.begin() + 1, lines.end()}, m - 1,
                            budget - i);
  return n;
}

std::string diagram_tag(const RepulsiveDiagram& dia) {
  std::ostringstream os;
  for (size_t i = 0; i < dia.lines.size(); ++i) {
    os << dia.lines[i].l << (dia.lines[i].exact ? '=' : '+');
    if (dia.corners[i]) {
      for (int c : *dia.corners[i]) os << c << '.';
    } else {
      os << '*';
    }
    os << '|';
  }
  return os.str();
}

std::mutex rep_mu;
std::map<std::string, Bnd> rep_memo;

}  // namespace

Bnd repulsive_bound(const BootstrapParams& p, const RepulsiveDiagram& dia) {
  int r = (int)dia.lines.size();
  if (r < 1 || r > kMaxLines)
    throw std::invalid_argument("repulsive diagram needs 1..5 lines");
  if (dia.corners.size() != dia.lines.size())
    throw std::invalid_argument("one corner per line");
  if (!dia.corners.back())
    throw std::invalid_argument(
        "line " + std::to_string(r) +
        ": open summed endpoint, the total diverges");
  for (int j = 0; j < r; ++j)
    if (dia.lines[j].l < 0)
      throw std::invalid_argument("line " + std::to_string(j + 1) +
                                  ": negative length floor");
  Key xl = canonicalize(*dia.corners.back());
  if (key_norm1(xl) + p.M > green_table(p.d).radius())
    throw std::invalid_argument("endpoint too far for the tail table");

  std::string tag = p.cache_key() + "/" + diagram_tag(dia);
  {
    std::lock_guard<std::mutex> lk(rep_mu);
    auto it = rep_memo.find(tag);
    if (it != rep_memo.end()) return it->second;
  }

  // Always the bond kind: tree lines are vertex-self-avoiding, but distinct
  // lines may legitimately meet at coinciding corners, which only the bond
  // flavor of joint self-avoidance survives.
  std::vector<cpp_int> counts = composite_counts(WalkKind::BOND_SAW, p.d,
                                                 dia.lines, dia.corners, p.M - 1);
  Interval step = p.step();
  Interval v(0.0);
  for (int L = 0; L < (int)counts.size(); ++L)
    if (counts[L] != 0) v = v + enclose(counts[L]) * ipow(step, L);

  const GreenTable& G = green_table(p.d);
  Interval base = ipow(p.r2d() * p.Gamma1, p.M);
  for (int n = 1; n <= r; ++n) {
    long long tn = prefix_assignments(dia.lines, r - n, p.M - 2);
    if (!tn) continue;
    if (n > G.nmax()) throw std::invalid_argument("tail power too large");
    v = v + double(tn) * base * ipow(p.Gamma2, n) * G.I(n, p.M, xl);
  }
  Bnd out{std::max(v.hi, 0.0)};
  std::lock_guard<std::mutex> lk(rep_mu);
  rep_memo.emplace(tag, out);
  return out;
}

Bnd double_connection_bound(const BootstrapParams& p, int dmin,
                            const std::vector<int>& x) {
  if (p.model == Model::lattice_trees) return Bnd{0.0};
  int f = std::max(dmin, 1);
  RepulsiveDiagram bubble;
  bubble.lines = {{f, false}, {f, false}};
  bubble.corners = {x, std::vector<int>{}};
  Bnd marked = repulsive_bound(p, bubble);

  GBoundFamily gb = make_gbounds(p);
  Key kx = canonicalize(x);
  Interval gt = gb.gtilde(kx, f, false).as_interval();
  Interval coarse = gt * gt;

  // one-step split: 2dz (D * Gtilde)(x) Gbar(x)
  LineBound l0 = gb.gtilde_line(0, false);
  Interval dg(0.0);
  for (auto& [k, c] : neighbor_transitions(kx, p.d))
    dg = dg + double(c) * l0.eval(p.d, k).as_interval();
  Interval split = p.r2d() * p.Gamma1 * (dg / double(2 * p.d)) *
                   gb.gbar(kx).as_interval();

  double best = std::min({marked.v, coarse.hi, split.hi});
  return Bnd{0.5 * std::max(best, 0.0)};
}

// ---------------------------------------------------------------------------
// Weighted bubbles.
// ---------------------------------------------------------------------------

std::vector<std::pair<Key, long long>> two_step_transitions(const Key& k,
                                                            Dim d) {
  std::map<Key, long long> acc;
  auto shifted = [&](size_t i, int nv) {
    std::string s(k);
    s.erase(s.begin() + i);
    if (nv) {
      auto it = std::upper_bound(s.begin(), s.end(), char(nv),
                                 std::greater<char>());
      s.insert(it, char(nv));
    }
    return s;
  };
  for (size_t i = 0; i < k.size();) {
    size_t j = i;
    while (j < k.size() && k[j] == k[i]) ++j;
    long long m = (long long)(j - i);
    int v = k[i];
    acc[shifted(i, v + 2)] += m;
    acc[shifted(i, v >= 2 ? v - 2 : 2 - v)] += m;
    i = j;
  }
  long long zeros = d - (long long)k.size();
  if (zeros > 0) {
    std::string s(k);
    auto it = std::upper_bound(s.begin(), s.end(), char(2),
                               std::greater<char>());
    s.insert(it, char(2));
    acc[s] += 2 * zeros;
  }
  return {acc.begin(), acc.end()};
}

Interval weighted_chain_terms(Dim d, int n, int l, const Key& x) {
  const GreenTable& G = green_table(d);
  if (n + 3 > G.nmax()) throw std::invalid_argument("weighted chain power");
  Interval v = green_at(d, n + 2, l + 1, x) -
               Interval::ratio(1.0, d) * green_at(d, n + 3, l, x);
  Interval sh(0.0);
  for (auto& [k, c] : two_step_transitions(x, d))
    sh = sh + double(c) * green_at(d, n + 3, l, k);
  return v + Interval::ratio(1.0, d) * sh / double(2 * d);
}

namespace {
// sup over the index set region of the pure chain expansion; depends only on
// the Green tables, so it is shared across bootstrap iterations
Interval weighted_chain_sup(Dim d, int n, int l, bool at_origin) {
  static std::mutex mu;
  static std::map<std::tuple<Dim, int, int, bool>, Interval> memo;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = memo.find({d, n, l, at_origin});
    if (it != memo.end()) return it->second;
  }
  Interval best(0.0);
  if (at_origin) {
    best = weighted_chain_terms(d, n, l, origin_key());
  } else {
    const int scan = 12;
    for (const Key& k : keys_in_ball(scan)) {
      if (key_norm2sq(k) <= 1) continue;
      best = imax(best, weighted_chain_terms(d, n, l, k));
    }
    // |x|_1 > scan: keep the positive terms of the expansion, push each to
    // its shell envelope (the two-step average only lowers |x|_1 by 2)
    Interval far =
        far_green_sup(d, n + 2, l + 1, scan + 1) +
        Interval::ratio(1.0, d) * far_green_sup(d, n + 3, l, scan - 1);
    best = imax(best, far);
  }
  std::lock_guard<std::mutex> lk(mu);
  return memo.emplace(std::make_tuple(d, n, l, at_origin), best)
      .first->second;
}
}  // namespace

Bnd weighted_two_point_bound(Dim d, const Interval& gamma2, int n, int l,
                             bool at_origin) {
  Interval s = Interval::ratio(2.0 * d - 2, 2.0 * d - 1);
  Interval pref = ipow(gamma2 * s, n + 1);
  return Bnd{std::max((pref * weighted_chain_sup(d, n, l, at_origin)).hi, 0.0)};
}

// ---------------------------------------------------------------------------
// The square-diagram bound cascade at the initialization point.
// ---------------------------------------------------------------------------

ChainLevels chain_levels(Dim d, Model model) {
  const GreenTable& G = green_table(d);
  Interval e = euler();
  Interval r = Interval::ratio(2.0 * d, 2.0 * d - 1);
  Interval s = Interval::ratio(2.0 * d - 2, 2.0 * d - 1);
  auto K = [&](int n, int m) { return ipow(s, n) * G.I(n, m, origin_key()); };

  ChainLevels c;
  c.l2 = ipow(e, 3) * K(3, 0);
  c.l3 = e * ipow(r, 2) * K(1, 2) + 2.0 * ipow(e, 2) * ipow(r, 2) * K(2, 2) +
         ipow(e, 3) * ipow(r, 3) * K(3, 3);
  c.l4 = 3.0 * e * ipow(r, 2) * K(1, 2) + e * ipow(r, 2) * K(2, 2) +
         2.0 * e * ipow(r, 3) * K(2, 2) + e * ipow(r, 3) * K(3, 4);
  c.l5 = 4.0 * e * ipow(r, 3) * K(1, 4) + 3.0 * e * ipow(r, 4) * K(2, 4) +
         e * ipow(r, 4) * K(3, 4);

  // Loop resolution: each term's loop is a closed walk of length >= 4 whose
  // short part must be a genuine polygon of the model (vertex-self-avoiding
  // for trees, bond-self-avoiding for animals), counted exactly up to the
  // circuit table depth; the remainder keeps the non-backtracking closed form
  // minus its resolved head, term by term in the series.
  CircuitTable Q = circuit_marks(model_kind(model), d, kCircLen);
  const SrwPolyTable& P = srw_table(d);
  Interval mu = Interval::ratio(1.0, 2.0 * d - 1);
  int Lstar = kCircLen;

  // composite closed-walk coefficients: A_n[len] with
  // sum_len mu^len A_n[len] = r^4 s^n I(n,4,0)
  std::array<std::vector<Interval>, 4> A;
  std::vector<std::vector<std::vector<cpp_int>>> comp(4);
  comp[1].resize(Lstar - 3);
  for (int m = 0; m + 4 <= Lstar; ++m) comp[1][m] = nbw_shell_poly(d, m);
  for (int nn = 2; nn <= 3; ++nn) {
    comp[nn].resize(Lstar - 3);
    for (int m = 0; m + 4 <= Lstar; ++m) {
      std::vector<cpp_int> acc;
      for (int m1 = 0; m1 <= m; ++m1) {
        auto g1 = nbw_shell_poly(d, m1);
        auto& g2 = comp[nn - 1][m - m1];
        if (acc.size() < g1.size() + g2.size() - 1)
          acc.resize(g1.size() + g2.size() - 1);
        for (size_t i = 0; i < g1.size(); ++i)
          for (size_t j = 0; j < g2.size(); ++j) acc[i + j] += g1[i] * g2[j];
      }
      comp[nn][m] = std::move(acc);
    }
  }
  Interval d2 = Interval(2.0 * d);
  for (int nn = 1; nn <= 3; ++nn) {
    A[nn].assign(Lstar + 1, Interval(0.0));
    for (int m = 0; m + 4 <= Lstar; ++m) {
      Interval a(0.0);
      for (size_t rr = 0; rr < comp[nn][m].size(); ++rr)
        if (comp[nn][m][rr] != 0)
          a = a + enclose(comp[nn][m][rr]) * P.origin(int(4 + rr));
      A[nn][m + 4] = ipow(d2, 4) * a;
    }
  }

  auto choose = [](long long n, int k) {
    cpp_int c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  };

  Interval tot(0.0);
  const double coef[4] = {0, 4, 3, 1};
  for (int nn = 1; nn <= 3; ++nn) {
    Interval poly(0.0), series(0.0);
    for (int len = 4; len <= Lstar; ++len) {
      cpp_int q = field_total(Q.at(1, len - 1), d) *
                  choose(len - 4 + nn - 1, nn - 1);
      if (q != 0) poly = poly + enclose(q) * ipow(mu, len);
      series = series + A[nn][len] * ipow(mu, len);
    }
    Interval total_n = ipow(r, 4) * K(nn, 4);
    Interval tail = total_n - series;
    if (tail.hi < 0.0) throw std::logic_error("resolved head exceeds total");
    Interval rep = poly + Interval(0.0, tail.hi);
    if (nn == 1) rep = rep / r;
    tot = tot + coef[nn] * rep;
  }
  c.l6 = Bnd{std::max((e * tot).hi, 0.0)};
  return c;
}

}  // namespace noble
