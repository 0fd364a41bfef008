#include "noble/walks.hpp"

#include <array>
#include <mutex>
#include <stdexcept>

namespace noble {

namespace {

constexpr int kMaxDfsLen = 10;   // template DFS guard (self-avoiding kinds)
constexpr int kMaxRecLen = 12;   // orbit recursion guard (SRW/NBW)

// ---- SRW / NBW orbit recursions ------------------------------------------

std::vector<SparseField<cpp_int>> srw_counts(Dim d, int L) {
  std::vector<SparseField<cpp_int>> c(L + 1);
  c[0].m.emplace(origin_key(), cpp_int(1));
  for (int n = 1; n <= L; ++n) c[n] = step_gather_exact(c[n - 1], d);
  return c;
}

// c_{n+1}(x) = sum_e c_n(x-e) - (2d-1) c_{n-1}(x), with the depth-2 seed
// correcting the immediate backtrack at the origin.
std::vector<SparseField<cpp_int>> nbw_counts(Dim d, int L) {
  std::vector<SparseField<cpp_int>> c(L + 1);
  c[0].m.emplace(origin_key(), cpp_int(1));
  if (L >= 1) c[1] = step_gather_exact(c[0], d);
  if (L >= 2) {
    c[2] = step_gather_exact(c[1], d);
    auto it = c[2].m.find(origin_key());
    it->second -= 2 * d;
    if (it->second == 0) c[2].m.erase(it);
  }
  for (int n = 3; n <= L; ++n) {
    c[n] = step_gather_exact(c[n - 1], d);
    for (auto& [k, v] : c[n - 2].m) {
      auto [it, fresh] = c[n].m.emplace(k, cpp_int(0));
      it->second -= cpp_int(2 * d - 1) * v;
      if (it->second == 0) c[n].m.erase(it);
    }
  }
  return c;
}

// ---- template DFS for the self-avoiding kinds ------------------------------
//
// Walks are enumerated in first-use-canonical form: axes are numbered in the
// order they are first used and the first step along each axis is +1. Each
// template with k axes represents (d)_k 2^k real walks (injective axis
// assignment times a global sign per axis); self-avoidance and the endpoint's
// orbit key are invariants of that action, so per-key totals divide back to
// exact per-point counts. Tables are d-independent and cached.

using KCounts = std::vector<cpp_int>;  // index = number of axes used

struct DfsTables {
  // open[n][key][k]: templates of length n ending at key, using k axes
  std::vector<std::unordered_map<Key, KCounts>> open;
  // marks[{i,j}][key][k]: closed length-(i+j) templates, position at step i
  std::map<std::pair<int, int>, std::unordered_map<Key, KCounts>> marks;
};

void bump(std::unordered_map<Key, KCounts>& m, const Key& key, int k) {
  auto& v = m[key];
  if (static_cast<int>(v.size()) <= k) v.resize(k + 1);
  v[k] += 1;
}

// positions encoded as 6 bits per axis (coordinate + 32), axis count <= 10
uint64_t enc_step(uint64_t pos, int axis, int delta) {
  uint64_t shift = 6ull * axis;
  uint64_t coord = (pos >> shift) & 63ull;
  return (pos & ~(63ull << shift)) | ((coord + delta) & 63ull) << shift;
}

Key key_of_enc(uint64_t pos, int k) {
  std::vector<int> v(k);
  for (int a = 0; a < k; ++a) v[a] = int((pos >> (6 * a)) & 63) - 32;
  return canonicalize(v);
}

struct DfsState {
  WalkKind kind;
  BondVariant bv;
  int L;
  std::vector<uint64_t> path;           // positions, path[0] = origin
  std::vector<std::pair<uint64_t, uint64_t>> edges;  // oriented steps taken
  DfsTables* out;

  bool vertex_ok(uint64_t y) const {
    // SAW: y must be unvisited, except y may equal the origin (this closes a
    // circuit; the caller stops the branch there)
    for (uint64_t p : path)
      if (p == y) return y == path[0];
    return true;
  }
  bool edge_ok(uint64_t x, uint64_t y) const {
    for (auto& [a, b] : edges) {
      if (a == x && b == y) return false;
      if (bv == BondVariant::undirected && a == y && b == x) return false;
    }
    return true;
  }

  void record(int k) {
    int n = static_cast<int>(path.size()) - 1;
    bool closed = (n >= 1 && path.back() == path[0]);
    // a walk back at the origin is not vertex-self-avoiding; it only feeds the
    // circuit marks
    if (!(kind == WalkKind::SAW && closed))
      bump(out->open[n], key_of_enc(path.back(), k), k);
    if (n >= 2 && closed) {
      for (int i = 1; i < n; ++i)
        bump(out->marks[{i, n - i}], key_of_enc(path[i], k), k);
    }
  }

  void run(int k) {
    record(k);
    int n = static_cast<int>(path.size()) - 1;
    if (n == L) return;
    uint64_t x = path.back();
    bool closed = (n >= 1 && x == path[0]);
    if (closed && kind == WalkKind::SAW) return;  // SAW may touch 0 only last
    for (int a = 0; a < k; ++a) {
      for (int delta : {1, -1}) {
        uint64_t y = enc_step(x, a, delta);
        if (!edge_ok(x, y)) continue;
        if (kind == WalkKind::SAW && !vertex_ok(y)) continue;
        path.push_back(y);
        edges.emplace_back(x, y);
        run(k);
        edges.pop_back();
        path.pop_back();
      }
    }
    if (k < kMaxDfsLen && k < L) {  // first use of a new axis, forced +1
      uint64_t y = enc_step(x, k, +1);
      path.push_back(y);
      edges.emplace_back(x, y);
      run(k + 1);
      edges.pop_back();
      path.pop_back();
    }
  }
};

const DfsTables& dfs_tables(WalkKind kind, BondVariant bv, int L) {
  static std::map<std::tuple<WalkKind, BondVariant, int>, DfsTables> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(kind, bv, L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  DfsTables t;
  t.open.resize(L + 1);
  DfsState st;
  st.kind = kind;
  st.bv = bv;
  st.L = L;
  uint64_t origin = 0;  // every 6-bit axis field carries coordinate + 32
  for (int a = 0; a < kMaxDfsLen; ++a) origin |= 32ull << (6 * a);
  st.path.push_back(origin);
  st.out = &t;
  st.run(0);
  return cache.emplace(key, std::move(t)).first->second;
}

cpp_int falling(Dim d, int k) {
  cpp_int r = 1;
  for (int i = 0; i < k; ++i) r *= (d - i);
  return r;
}

SparseField<cpp_int> materialize(const std::unordered_map<Key, KCounts>& tpl, Dim d) {
  SparseField<cpp_int> f;
  for (auto& [key, ks] : tpl) {
    cpp_int tot = 0;
    for (int k = 0; k < static_cast<int>(ks.size()); ++k) {
      if (ks[k] == 0) continue;
      tot += ks[k] * falling(d, k) * (cpp_int(1) << k);
    }
    if (tot == 0) continue;
    cpp_int orb = orbit_size_exact(key, d);
    // exact by symmetry: the orbit total divides evenly
    if (tot % orb != 0) throw std::logic_error("walk orbit total not divisible");
    f.m.emplace(key, tot / orb);
  }
  return f;
}

}  // namespace

WalkTable count_walks(WalkKind kind, Dim d, int L, BondVariant bv) {
  if (d < 1) throw std::invalid_argument("count_walks: d < 1");
  WalkTable t{kind, d, {}};
  if (kind == WalkKind::SRW || kind == WalkKind::NBW) {
    if (L > kMaxRecLen) throw std::invalid_argument("count_walks: L > 12");
    t.c = (kind == WalkKind::SRW) ? srw_counts(d, L) : nbw_counts(d, L);
    return t;
  }
  if (L > kMaxDfsLen) throw std::invalid_argument("count_walks: L > 10 for DFS kinds");
  const DfsTables& tpl = dfs_tables(kind, bv, L);
  t.c.resize(L + 1);
  for (int n = 0; n <= L; ++n) t.c[n] = materialize(tpl.open[n], d);
  return t;
}

cpp_rat normalized_count(WalkKind kind, Dim d, int L, const Key& x, BondVariant bv) {
  WalkTable t = count_walks(kind, d, L, bv);
  cpp_int num = t.c[L].get(x);
  cpp_int den;
  switch (kind) {
    case WalkKind::SRW:
      den = boost::multiprecision::pow(cpp_int(2 * d), L);
      break;
    case WalkKind::NBW:
      den = 1;
      if (L > 0) den = 2 * d * boost::multiprecision::pow(cpp_int(2 * d - 1), unsigned(L - 1));
      break;
    default:
      den = field_total(t.c[L], d);
  }
  if (den == 0) throw std::domain_error("normalized_count: no walks");
  return cpp_rat(num, den);
}

const SparseField<cpp_int>& CircuitTable::at(int i, int j) const {
  static const SparseField<cpp_int> empty;
  auto it = q.find({i, j});
  return it == q.end() ? empty : it->second;
}

CircuitTable circuit_marks(WalkKind kind, Dim d, int Lmax, BondVariant bv) {
  if (kind != WalkKind::SAW && kind != WalkKind::BOND_SAW)
    throw std::invalid_argument("circuit_marks: self-avoiding kinds only");
  if (Lmax > kMaxDfsLen) throw std::invalid_argument("circuit_marks: L > 10");
  const DfsTables& tpl = dfs_tables(kind, bv, Lmax);
  CircuitTable ct{kind, d, {}};
  for (auto& [ij, m] : tpl.marks) {
    auto f = materialize(m, d);
    if (!f.empty()) ct.q.emplace(ij, std::move(f));
  }
  return ct;
}

// ---- animals / trees -------------------------------------------------------

namespace {

// vertices encoded as 6 bits per axis + 32 offset, d <= 3
uint64_t venc(const std::vector<int>& x) {
  uint64_t p = 0;
  for (std::size_t a = 0; a < x.size(); ++a) p |= uint64_t(x[a] + 32) << (6 * a);
  return p;
}
std::vector<int> vdec(uint64_t p, Dim d) {
  std::vector<int> x(d);
  for (int a = 0; a < d; ++a) x[a] = int((p >> (6 * a)) & 63) - 32;
  return x;
}
uint64_t vstep(uint64_t p, int axis, int delta) {
  uint64_t shift = 6ull * axis;
  uint64_t coord = (p >> shift) & 63ull;
  return (p & ~(63ull << shift)) | ((coord + delta) & 63ull) << shift;
}

struct Edge {
  uint64_t u, v;  // u < v
};

}  // namespace

cpp_int enumerate_animals(Dim d, int nbonds, bool trees_only,
                          const std::function<bool(const EdgeList&)>& filter) {
  if (d > 3 || d < 1) throw std::invalid_argument("enumerate_animals: d <= 3 only");
  if (nbonds > 8 || nbonds < 0) throw std::invalid_argument("enumerate_animals: n <= 8 only");
  uint64_t org = venc(std::vector<int>(d, 0));

  // Redelmeier untried-set scheme: candidate edges are discovered in a fixed
  // order as the cluster grows, and the recursion only ever picks candidates
  // with an index above the last one chosen, so each connected bond set is
  // generated exactly once.
  std::vector<Edge> cand;
  std::vector<Edge> chosen;
  std::vector<uint64_t> verts{org};
  cpp_int count = 0;

  auto has_vert = [&](uint64_t v) {
    for (auto x : verts)
      if (x == v) return true;
    return false;
  };
  auto add_edges_of = [&](uint64_t v) {
    for (int a = 0; a < d; ++a) {
      for (int delta : {1, -1}) {
        uint64_t w = vstep(v, a, delta);
        Edge e{std::min(v, w), std::max(v, w)};
        bool seen = false;
        for (auto& x : cand)
          if (x.u == e.u && x.v == e.v) {
            seen = true;
            break;
          }
        if (!seen) cand.push_back(e);
      }
    }
  };
  auto emit = [&]() {
    if (filter) {
      EdgeList el;
      for (auto& e : chosen) el.emplace_back(vdec(e.u, d), vdec(e.v, d));
      if (!filter(el)) return;
    }
    ++count;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (static_cast<int>(chosen.size()) == nbonds) {
      emit();
      return;
    }
    for (std::size_t i = start; i < cand.size(); ++i) {
      Edge e = cand[i];  // copy: cand reallocates below
      bool hu = has_vert(e.u), hv = has_vert(e.v);
      if (trees_only && hu && hv) continue;  // would close a cycle
      std::size_t save = cand.size();
      chosen.push_back(e);
      bool grew = !(hu && hv);
      if (grew) {
        verts.push_back(hu ? e.v : e.u);
        add_edges_of(verts.back());
      }
      rec(i + 1);
      if (grew) verts.pop_back();
      cand.resize(save);
      chosen.pop_back();
    }
  };

  add_edges_of(org);
  rec(0);
  return count;
}

std::pair<cpp_rat, cpp_rat> check_count_bound(Dim d, int n) {
  if (n < 1) throw std::invalid_argument("check_count_bound: n >= 1");
  cpp_rat tn(enumerate_animals(d, n, /*trees_only=*/true));
  cpp_int fact = 1;
  for (int i = 2; i <= n + 1; ++i) fact *= i;
  cpp_int num = cpp_int(2 * d) * boost::multiprecision::pow(cpp_int(2 * d - 1), unsigned(n - 1)) *
                boost::multiprecision::pow(cpp_int(n + 1), unsigned(n));
  return {tn, cpp_rat(num, fact)};
}

}  // namespace noble
