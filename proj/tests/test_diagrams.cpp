#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>
#include <vector>

#include "noble/diagrams.hpp"
#include "noble/green.hpp"
#include "noble/walks.hpp"

using namespace noble;

namespace {

bool overlap(const Interval& a, const Interval& b) {
  return a.lo <= b.hi && b.lo <= a.hi;
}

// reference composite counter: explicit coordinates, feasible at d <= 3
struct BruteComposite {
  bool bond = false;
  int d = 2, Lmax = 4;
  std::vector<LineConstraint> lines;
  std::vector<std::optional<std::vector<int>>> corners;
  std::map<int, long long> out;
  std::vector<std::vector<int>> path;
  std::set<std::pair<std::vector<int>, std::vector<int>>> edges;

  std::vector<int> padded(std::vector<int> c) const {
    c.resize(d, 0);
    return c;
  }
  void splits(int L) {
    int r = (int)lines.size();
    std::vector<std::vector<long long>> dp(r + 1,
                                           std::vector<long long>(L + 1, 0));
    dp[0][0] = 1;
    for (int j = 0; j < r; ++j)
      for (int s = 0; s <= L; ++s) {
        if (!dp[j][s]) continue;
        for (int t = s; t <= L; ++t) {
          int len = t - s;
          if (lines[j].exact ? len != lines[j].l : len < lines[j].l) continue;
          if (corners[j] && path[t] != padded(*corners[j])) continue;
          dp[j + 1][t] += dp[j][s];
        }
      }
    if (dp[r][L]) out[L] += dp[r][L];
  }
  void dfs(int L) {
    splits(L);
    if (L == Lmax) return;
    for (int a = 0; a < d; ++a)
      for (int s : {1, -1}) {
        auto np = path.back();
        np[a] += s;
        if (bond) {
          std::pair<std::vector<int>, std::vector<int>> e =
              std::minmax(path.back(), np);
          if (edges.count(e)) continue;
          edges.insert(e);
          path.push_back(np);
          dfs(L + 1);
          path.pop_back();
          edges.erase(e);
        } else {
          bool closes = corners.back() && np == padded(*corners.back()) &&
                        np == path[0];
          bool hit = false;
          for (size_t i = closes ? 1 : 0; i < path.size() && !hit; ++i)
            hit = path[i] == np;
          if (hit) continue;
          path.push_back(np);
          if (closes)
            splits(L + 1);
          else
            dfs(L + 1);
          path.pop_back();
        }
      }
  }
  void run() {
    path.assign(1, std::vector<int>(d, 0));
    dfs(0);
  }
};

void check_composite(WalkKind kind, int d, std::vector<LineConstraint> lines,
                     std::vector<std::optional<std::vector<int>>> corners,
                     int Lmax) {
  BruteComposite b;
  b.bond = kind == WalkKind::BOND_SAW;
  b.d = d;
  b.Lmax = Lmax;
  b.lines = lines;
  b.corners = corners;
  b.run();
  auto counts = composite_counts(kind, d, lines, corners, Lmax);
  for (int L = 0; L <= Lmax; ++L) {
    cpp_int ref = b.out.count(L) ? b.out[L] : 0;
    CHECK(counts[L] == ref);
  }
}

BootstrapParams params(Model m, Dim d, double g1, double g2) {
  BootstrapParams p;
  p.model = m;
  p.d = d;
  p.Gamma1 = Interval(g1);
  p.Gamma2 = Interval(g2);
  p.M = d >= 30 ? 8 : 10;
  return p;
}

}  // namespace

TEST_CASE("composite counts match an explicit-coordinate reference at small d") {
  using V = std::vector<int>;
  for (WalkKind kind : {WalkKind::SAW, WalkKind::BOND_SAW})
    for (int d : {2, 3}) {
      check_composite(kind, d, {{0, false}}, {V{1, 1}}, 6);
      check_composite(kind, d, {{1, false}, {1, false}}, {V{1}, V{}}, 6);
      check_composite(kind, d, {{2, true}, {0, false}}, {std::nullopt, V{2}}, 6);
      check_composite(kind, d, {{1, false}, {1, false}, {0, false}},
                      {std::nullopt, std::nullopt, V{1, 1}}, 6);
      check_composite(kind, d, {{0, false}, {2, false}}, {V{0, 1}, V{1, 1}}, 5);
      check_composite(kind, d, {{1, true}, {1, true}, {1, true}, {1, true}},
                      {std::nullopt, std::nullopt, std::nullopt, V{}}, 4);
    }
}

TEST_CASE("composite splits reproduce the walk-count law at full dimension") {
  // three lines (>=1, >=1, >=0) with free interior corners: every walk of
  // length i carries (i-1)i/2 admissible splits
  WalkTable T = count_walks(WalkKind::BOND_SAW, 18, 7);
  std::vector<int> pt{2, 1, 1};
  auto counts = composite_counts(WalkKind::BOND_SAW, 18,
                                 {{1, false}, {1, false}, {0, false}},
                                 {std::nullopt, std::nullopt, pt}, 7);
  Key kx = canonicalize(pt);
  for (int i = 2; i <= 7; ++i)
    CHECK(counts[i] == T.c[i].get(kx) * ((i - 1) * i / 2));

  // single unconstrained line pinned at x: plain per-point counts
  auto single = composite_counts(WalkKind::SAW, 20, {{0, false}},
                                 {std::vector<int>{1, 1}}, 6);
  WalkTable S = count_walks(WalkKind::SAW, 20, 6);
  for (int i = 0; i <= 6; ++i)
    CHECK(single[i] == S.c[i].get(key_of({1, 1})));
}

TEST_CASE("marked circuits agree with the bubble composite") {
  // both corners pinned: the composite with two >=1 lines through x is the
  // marked-circuit count summed over split points
  for (int d : {3, 17}) {
    CircuitTable ct = circuit_marks(WalkKind::BOND_SAW, d, 6);
    auto counts = composite_counts(WalkKind::BOND_SAW, d,
                                   {{1, false}, {1, false}},
                                   {std::vector<int>{1}, std::vector<int>{}}, 6);
    Key e1 = key_of({1});
    for (int len = 2; len <= 6; ++len) {
      cpp_int marks = 0;
      for (int i = 1; i < len; ++i) marks += ct.at(i, len - i).get(e1);
      CHECK(counts[len] == marks);
    }
  }
}

TEST_CASE("two-step transitions partition the 2d two-step moves") {
  for (Dim d : {2, 5, 18}) {
    for (const Key& k : {origin_key(), key_of({1}), key_of({2, 1}),
                         key_of({1, 1, 1})}) {
      if ((int)k.size() > d) continue;
      long long tot = 0;
      for (auto& [k2, c] : two_step_transitions(k, d)) {
        CHECK(c > 0);
        tot += c;
        // each move changes one coordinate by 2
        CHECK(std::abs(key_norm1(k2) - key_norm1(k)) <= 2);
      }
      CHECK(tot == 2 * d);
    }
  }
  // spot check at the origin: every axis leads to the same key "2"
  auto tr = two_step_transitions(origin_key(), 4);
  REQUIRE(tr.size() == 1);
  CHECK(tr[0].first == key_of({2}));
  CHECK(tr[0].second == 8);
}

TEST_CASE("weighted chain expansion matches the transform route") {
  const GreenTable& G = green_table(18);
  for (auto [n, l] : {std::pair{1, 0}, {1, 2}, {1, 3}, {2, 0}, {2, 2}}) {
    for (const Key& x : {origin_key(), key_of({1}), key_of({1, 1}),
                         key_of({2, 1}), key_of({3})}) {
      Interval mine = weighted_chain_terms(18, n, l, x);
      Interval table = G.weighted_chain(1, n, l, x);
      CHECK(overlap(mine, table));
      CHECK(mine.width() < 1e-8);
    }
  }
}

TEST_CASE("weighted two-point bounds dominate interior samples and scale") {
  // the sup bound must dominate the expansion at every sampled point of the
  // far region, including points beyond the scan radius
  for (auto [n, l] : {std::pair{1, 0}, {2, 3}}) {
    Bnd b = weighted_two_point_bound(18, Interval(1.0), n, l, false);
    Interval s = Interval::ratio(2.0 * 18 - 2, 2.0 * 18 - 1);
    for (const Key& x :
         {key_of({1, 1}), key_of({2}), key_of({5, 3}), key_of({9, 4}),
          key_of({13}), key_of({7, 7})}) {
      Interval v = ipow(s, n + 1) * weighted_chain_terms(18, n, l, x);
      CHECK(v.hi <= b.v * (1 + 1e-12));
    }
    // gamma2 scaling is exactly the (n+1)-th power
    Bnd b2 = weighted_two_point_bound(18, Interval(1.25), n, l, false);
    Interval ratio = ipow(Interval(1.25), n + 1);
    CHECK(b2.v == doctest::Approx(b.v * ratio.mid()).epsilon(1e-9));
  }
  // origin entries are pointwise values
  Bnd o = weighted_two_point_bound(18, Interval(1.0), 1, 6, true);
  Interval s = Interval::ratio(34.0, 35.0);
  Interval direct = ipow(s, 2) * weighted_chain_terms(18, 1, 6, origin_key());
  CHECK(o.v >= direct.hi - 1e-15);
  CHECK(o.v <= direct.hi + direct.mag() * 1e-12 + 1e-15);
}

TEST_CASE("far Green envelope dominates sampled tail values") {
  const GreenTable& G = green_table(18);
  for (auto [n, m] : {std::pair{1, 2}, {2, 0}, {3, 4}}) {
    Interval sup = far_green_sup(18, n, m, 9);
    for (const Key& x : {key_of({9}), key_of({5, 4}), key_of({3, 3, 3}),
                         key_of({6, 3, 1}), key_of({11}), key_of({4, 4, 4})})
      CHECK(G.I(n, m, x).hi <= sup.hi * (1 + 1e-12));
    // and it is decreasing in the distance floor
    CHECK(far_green_sup(18, n, m, 12).hi <= sup.hi * (1 + 1e-12));
  }
}

TEST_CASE("two-point family: structure of the line bounds") {
  BootstrapParams p = params(Model::lattice_animals, 17, 1.12, 1.40);
  GBoundFamily f = make_gbounds(p);

  // one-point scalars
  CHECK(f.g.hi > 1.0);
  CHECK(f.giota.hi < f.g.hi);
  CHECK(f.beta.hi > 1.0);
  CHECK(f.beta.hi < 1.1);

  // the origin value of gtilde is 1 + (positive tail), and gbar(0) carries
  // the full one-point weight
  CHECK(f.gtilde(origin_key()).v >= 1.0);
  CHECK(f.gtilde(origin_key()).v < 1.01);
  CHECK(f.gbar(origin_key()).v >= f.g.lo);

  // pointwise domination gbar >= giota * gtilde away from the origin
  for (const Key& x : {key_of({1}), key_of({1, 1}), key_of({2, 1})}) {
    double gt = f.gtilde(x).v;
    CHECK(f.gbar(x).v >= gt * f.giota.lo * (1 - 1e-12));
    CHECK(gt > 0.0);
  }

  // longer length floors only lower the bound; exact length lowers it further
  for (const Key& x : {key_of({1}), key_of({2, 1, 1})}) {
    double l0 = f.gtilde(x, 0).v;
    double l2 = f.gtilde(x, 2).v;
    double l4 = f.gtilde(x, 4).v;
    CHECK(l2 <= l0 * (1 + 1e-12));
    CHECK(l4 <= l2 * (1 + 1e-12));
    CHECK(f.gtilde(x, 4, true).v <= l4 * (1 + 1e-12));
  }

  // a floor at the explicit depth leaves only the integral tail
  double far_only = f.gtilde(key_of({1}), p.M).v;
  CHECK(far_only < 1e-4);
  CHECK(f.gtilde(key_of({1}), p.M - 1).v < f.gtilde(key_of({1}), 1).v);
}

TEST_CASE("repulsive bounds: domination, monotonicity, and the plain product") {
  BootstrapParams p = params(Model::lattice_animals, 17, 1.10, 1.35);
  GBoundFamily f = make_gbounds(p);
  using V = std::vector<int>;

  // bubble through e1 is dominated by the product of its two lines
  RepulsiveDiagram bubble;
  bubble.lines = {{1, false}, {1, false}};
  bubble.corners = {V{1}, V{}};
  Bnd rb = repulsive_bound(p, bubble);
  double prod =
      f.gtilde(key_of({1}), 1).v * f.gtilde(key_of({1}), 1).v;
  CHECK(rb.v <= prod * (1 + 1e-12));
  CHECK(rb.v > 0.0);

  // triangle 0 -> e1 -> e1+e2 -> 0, all floors 1; pinning the interior
  // corners restricts the summed triangle
  RepulsiveDiagram tri;
  tri.lines = {{1, false}, {1, false}, {1, false}};
  tri.corners = {V{1}, V{1, 1}, V{}};
  Bnd rt = repulsive_bound(p, tri);
  RepulsiveDiagram tri_sum = tri;
  tri_sum.corners[0] = std::nullopt;
  tri_sum.corners[1] = std::nullopt;
  CHECK(rt.v <= repulsive_bound(p, tri_sum).v * (1 + 1e-12));

  // raising a length floor never increases the bound
  RepulsiveDiagram tri3 = tri;
  tri3.lines[0].l = 3;
  CHECK(repulsive_bound(p, tri3).v <= rt.v * (1 + 1e-12));

  // widening Gamma never decreases it
  BootstrapParams p2 = p;
  p2.Gamma1 = Interval(1.2);
  p2.Gamma2 = Interval(1.5);
  CHECK(repulsive_bound(p2, tri).v >= rt.v * (1 - 1e-12));

  // increasing the explicit depth never increases it (more walks resolved)
  BootstrapParams p8 = p;
  p8.M = 8;
  CHECK(rt.v <= repulsive_bound(p8, tri).v * (1 + 1e-12));

  // refusals: open final corner, too many lines
  RepulsiveDiagram open = bubble;
  open.corners[1] = std::nullopt;
  CHECK_THROWS_AS((void)repulsive_bound(p, open), std::invalid_argument);
  RepulsiveDiagram six;
  six.lines.assign(6, {0, false});
  six.corners.assign(6, V{});
  CHECK_THROWS_AS((void)repulsive_bound(p, six), std::invalid_argument);
}

TEST_CASE("repulsive bounds: randomized constraint monotonicity") {
  std::mt19937 rng(0xd1a6);
  BootstrapParams p = params(Model::lattice_animals, 18, 1.08, 1.30);
  using V = std::vector<int>;
  const std::vector<V> pts = {V{}, V{1}, V{1, 1}, V{2}, V{2, 1}, V{1, 1, 1}};
  int done = 0;
  while (done < 40) {
    int r = 2 + int(rng() % 3);
    RepulsiveDiagram dia;
    for (int j = 0; j < r; ++j) {
      dia.lines.push_back({int(rng() % 3), false});
      if (j + 1 == r || rng() % 2)
        dia.corners.push_back(pts[rng() % pts.size()]);
      else
        dia.corners.push_back(std::nullopt);
    }
    Bnd base = repulsive_bound(p, dia);

    // loosen: drop one floor to zero, or free one interior pinned corner
    RepulsiveDiagram loose = dia;
    int j = int(rng() % r);
    loose.lines[j].l = 0;
    if (j + 1 < r && loose.corners[j] && rng() % 2)
      loose.corners[j] = std::nullopt;
    Bnd rel = repulsive_bound(p, loose);
    CHECK(rel.v >= base.v * (1 - 1e-12));
    ++done;
  }
}

TEST_CASE("double connections: trees vanish, animals fall with the floor") {
  BootstrapParams lt = params(Model::lattice_trees, 18, 1.10, 1.34);
  CHECK(double_connection_bound(lt, 0, {1}).v == 0.0);

  BootstrapParams la = params(Model::lattice_animals, 17, 1.12, 1.40);
  GBoundFamily f = make_gbounds(la);
  for (const std::vector<int>& x : {std::vector<int>{1}, {1, 1}, {2, 1}}) {
    Bnd d0 = double_connection_bound(la, 0, x);
    Bnd d2 = double_connection_bound(la, 2, x);
    Bnd d4 = double_connection_bound(la, 4, x);
    CHECK(d2.v <= d0.v * (1 + 1e-12));
    CHECK(d4.v <= d2.v * (1 + 1e-12));
    // never worse than half the square of the unfloored line
    double gt = f.gtilde(canonicalize(x)).v;
    CHECK(d0.v <= 0.5 * gt * gt * (1 + 1e-10));
    CHECK(d0.v > 0.0);
  }
}

TEST_CASE("square-diagram cascade at the initialization point, d = 18 trees") {
  ChainLevels c = chain_levels(18, Model::lattice_trees);

  // enclosures must be tight and inside the independently computed windows
  CHECK(c.l2.width() < 1e-7);
  CHECK(overlap(c.l2, Interval(22.3223664, 22.3223665)));
  CHECK(overlap(c.l3, Interval(0.85541190, 0.85541191)));
  CHECK(overlap(c.l4, Interval(0.57251432, 0.57251433)));
  CHECK(overlap(c.l5, Interval(0.07553356, 0.07553357)));

  // the cascade is strictly decreasing
  CHECK(c.l3.hi < c.l2.lo);
  CHECK(c.l4.hi < c.l3.lo);
  CHECK(c.l5.hi < c.l4.lo);
  CHECK(c.l6.v < c.l5.lo);

  // the repulsive level: a genuine improvement but not below the polygon
  // contribution itself
  CHECK(c.l6.v > 0.015);
  CHECK(c.l6.v <= 0.032);
}

TEST_CASE("square-diagram cascade: animal flavor stays ordered") {
  ChainLevels c = chain_levels(17, Model::lattice_animals);
  CHECK(c.l3.hi < c.l2.lo);
  CHECK(c.l4.hi < c.l3.lo);
  CHECK(c.l5.hi < c.l4.lo);
  CHECK(c.l6.v < c.l5.lo);
  CHECK(c.l6.v > 0.0);
}

TEST_CASE("pairing line bounds at the origin agrees with direct sums") {
  BootstrapParams p = params(Model::lattice_animals, 17, 1.12, 1.40);
  GBoundFamily f = make_gbounds(p);
  LineBound a = f.gtilde_line(1);
  // sum over x != 0 of gtilde(x)^2: pair the line with itself and compare
  // against an explicit partial sum (it must dominate it)
  Bnd paired = pair_at_origin(a, a, 17);
  Interval partial(0.0);
  for (const Key& k : keys_in_ball(4)) {
    if (k.empty()) continue;
    Interval v = a.eval(17, k).as_interval();
    partial = partial + orbit_size(k, 17) * v * v;
  }
  CHECK(partial.hi <= paired.v * (1 + 1e-10));
  CHECK(paired.v < 0.1);  // sane magnitude for a floored bubble at d = 17
}

TEST_CASE("bootstrap parameter accessors and refusals") {
  BootstrapParams p = params(Model::lattice_trees, 16, 1.10225007, 1.335307);
  CHECK(p.mubar().hi * (2 * 16 - 1) == doctest::Approx(1.10225007).epsilon(1e-12));
  CHECK(p.mu().hi < p.mubar().lo);  // c_mu > 1 sharpens the iota branch
  CHECK(p.g().contains(std::exp(1.0) * 1.10225007));
  CHECK(p.step().hi == p.mubar().hi);
  CHECK(p.r2d().contains(32.0 / 31.0));

  // cache keys separate every knob that changes a bound
  BootstrapParams q = p;
  q.Gamma2 = Interval(1.4);
  CHECK(p.cache_key() != q.cache_key());
  q = p;
  q.M = 8;
  CHECK(p.cache_key() != q.cache_key());
  q = p;
  q.model = Model::lattice_animals;
  CHECK(p.cache_key() != q.cache_key());

  // the weighted index set is the ten published components
  const auto& w = weighted_index_set();
  CHECK(w.size() == 10);
  int origins = 0;
  for (auto& wi : w) {
    CHECK(wi.n >= 1);
    CHECK(wi.n <= 2);
    if (wi.at_origin) {
      ++origins;
      CHECK(wi.l == 6);
    }
  }
  CHECK(origins == 2);

  // explicit depths past the walk tables are refused, not silently truncated
  BootstrapParams deep = p;
  deep.M = 12;
  CHECK_THROWS_AS((void)make_gbounds(deep), std::invalid_argument);
}

