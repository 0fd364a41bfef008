#include "noble/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace noble {

Key canonicalize(const std::vector<int>& x) {
  std::vector<int> mag;
  mag.reserve(x.size());
  for (int v : x) {
    int a = std::abs(v);
    if (a > 0) mag.push_back(a);
  }
  std::sort(mag.begin(), mag.end(), std::greater<int>());
  Key k;
  k.reserve(mag.size());
  for (int a : mag) {
    if (a > 255) throw std::invalid_argument("canonicalize: |x_i| > 255");
    k.push_back(static_cast<char>(a));
  }
  return k;
}

Key key_of(std::initializer_list<int> x) { return canonicalize(std::vector<int>(x)); }

int key_norm1(const Key& k) {
  int s = 0;
  for (unsigned char c : k) s += c;
  return s;
}

int key_norm2sq(const Key& k) {
  int s = 0;
  for (unsigned char c : k) s += int(c) * int(c);
  return s;
}

int key_supnorm(const Key& k) { return k.empty() ? 0 : static_cast<unsigned char>(k[0]); }

LatticePoint key_point(const Key& k, Dim d) {
  if (static_cast<Dim>(k.size()) > d)
    throw std::invalid_argument("key_point: key needs more axes than d");
  LatticePoint p;
  p.c.assign(d, 0);
  for (std::size_t i = 0; i < k.size(); ++i) p.c[i] = static_cast<unsigned char>(k[i]);
  return p;
}

std::string key_str(const Key& k) {
  std::string s = "[";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(int(static_cast<unsigned char>(k[i])));
  }
  return s + "]";
}

Key key_parse(const std::string& s) {
  std::vector<int> vals;
  int cur = -1;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      cur = (cur < 0 ? 0 : cur * 10) + (c - '0');
    } else if (cur >= 0) {
      vals.push_back(cur);
      cur = -1;
    }
  }
  if (cur >= 0) vals.push_back(cur);
  return canonicalize(vals);
}

cpp_int orbit_size_exact(const Key& k, Dim d) {
  int r = static_cast<int>(k.size());
  if (r > d) return 0;
  cpp_int n = 1;
  for (int i = 0; i < r; ++i) n *= (d - i);  // falling factorial d!/(d-r)!
  // divide by multiplicities of equal magnitudes
  int run = 1;
  for (int i = 1; i <= r; ++i) {
    if (i < r && k[i] == k[i - 1]) {
      ++run;
    } else {
      cpp_int f = 1;
      for (int j = 2; j <= run; ++j) f *= j;
      n /= f;
      run = 1;
    }
  }
  return n << r;  // 2^r sign choices
}

Interval enclose(const cpp_int& v) {
  double x = static_cast<double>(v);
  // double(v) rounds to nearest; one ulp outward encloses the exact value
  return Interval(std::nextafter(x, -detail::inf()), std::nextafter(x, detail::inf()));
}

Interval enclose(const cpp_rat& v) {
  double x = static_cast<double>(v);
  return Interval(std::nextafter(x, -detail::inf()), std::nextafter(x, detail::inf()));
}

Interval orbit_size(const Key& k, Dim d) { return enclose(orbit_size_exact(k, d)); }

std::vector<Key> keys_in_ball(int radius) {
  std::vector<Key> out;
  Key cur;
  std::function<void(int, int)> rec = [&](int remaining, int maxpart) {
    out.push_back(cur);
    for (int a = std::min(remaining, maxpart); a >= 1; --a) {
      cur.push_back(static_cast<char>(a));
      rec(remaining - a, a);
      cur.pop_back();
    }
  };
  rec(radius, std::min(radius, 255));
  return out;
}

std::vector<LatticePoint> expand_orbit(const Key& k, Dim d, std::size_t guard) {
  cpp_int sz = orbit_size_exact(k, d);
  if (sz > guard) throw std::runtime_error("expand_orbit: orbit larger than guard");
  std::vector<LatticePoint> pts;
  int r = static_cast<int>(k.size());
  std::vector<int> axes(r, 0);
  std::vector<int> sign(r, 0);
  // choose distinct axes (ordered; duplicates from equal magnitudes removed via set)
  std::vector<char> used(d, 0);
  std::function<void(int)> pick = [&](int i) {
    if (i == r) {
      LatticePoint p;
      p.c.assign(d, 0);
      for (int j = 0; j < r; ++j) p.c[axes[j]] = sign[j] * int(static_cast<unsigned char>(k[j]));
      pts.push_back(std::move(p));
      return;
    }
    for (int a = 0; a < d; ++a) {
      if (used[a]) continue;
      // avoid double-counting permutations within equal-magnitude runs:
      // force increasing axes along each run
      if (i > 0 && k[i] == k[i - 1] && a < axes[i - 1]) continue;
      used[a] = 1;
      axes[i] = a;
      for (int s : {1, -1}) {
        sign[i] = s;
        pick(i + 1);
      }
      used[a] = 0;
    }
  };
  pick(0);
  return pts;
}

std::vector<std::pair<Key, long long>> neighbor_transitions(const Key& k, Dim d) {
  std::vector<std::pair<Key, long long>> out;
  int r = static_cast<int>(k.size());
  if (r > d) return out;
  // groups of equal magnitude
  int i = 0;
  while (i < r) {
    int j = i;
    while (j < r && k[j] == k[i]) ++j;
    long long cnt = j - i;
    int a = static_cast<unsigned char>(k[i]);
    {  // a -> a+1
      std::vector<int> v;
      for (int t = 0; t < r; ++t) v.push_back(static_cast<unsigned char>(k[t]));
      v[i] = a + 1;
      out.emplace_back(canonicalize(v), cnt);
    }
    {  // a -> a-1 (possibly dropping to zero)
      std::vector<int> v;
      for (int t = 0; t < r; ++t) v.push_back(static_cast<unsigned char>(k[t]));
      v[i] = a - 1;
      out.emplace_back(canonicalize(v), cnt);
    }
    i = j;
  }
  if (d > r) {  // a zero coordinate becomes +-1
    std::vector<int> v;
    for (int t = 0; t < r; ++t) v.push_back(static_cast<unsigned char>(k[t]));
    v.push_back(1);
    out.emplace_back(canonicalize(v), 2LL * (d - r));
  }
  return out;
}

SparseField<cpp_int> step_gather_exact(const SparseField<cpp_int>& f, Dim d) {
  SparseField<cpp_int> g;
  std::unordered_map<Key, char> cand;
  for (const auto& [k, v] : f.m) {
    cand.emplace(k, 0);
    for (auto& [k2, c] : neighbor_transitions(k, d)) cand.emplace(k2, 0);
  }
  for (const auto& [k, z] : cand) {
    cpp_int acc = 0;
    for (auto& [k2, c] : neighbor_transitions(k, d)) {
      auto it = f.m.find(k2);
      if (it == f.m.end()) continue;
      acc += it->second * c;
    }
    if (acc != 0) g.m.emplace(k, acc);
  }
  return g;
}

namespace {
template <class V, class Mul>
SparseField<V> convolve_impl(const SparseField<V>& f, const SparseField<V>& g, Dim d,
                             std::size_t guard, Mul mul) {
  // expand the smaller-support factor
  cpp_int szf = 0, szg = 0;
  for (auto& [k, v] : f.m) szf += orbit_size_exact(k, d);
  for (auto& [k, v] : g.m) szg += orbit_size_exact(k, d);
  const SparseField<V>& small = (szg < szf) ? g : f;
  cpp_int sz = (szg < szf) ? szg : szf;
  if (sz > guard) throw std::runtime_error("up_convolve: expansion larger than guard");

  // h(x0) = sum_y small(y) * big(x0 - y); candidate outputs from x0 = y + w
  // with w a representative point of big's keys, then closed under the orbit
  // action by symmetry of h.
  std::unordered_map<Key, char> cand;
  std::vector<std::pair<LatticePoint, V>> pts;
  for (auto& [k, v] : small.m)
    for (auto& p : expand_orbit(k, d, static_cast<std::size_t>(-1))) pts.emplace_back(p, v);
  const SparseField<V>& big = (&small == &f) ? g : f;
  for (auto& [kb, vb] : big.m) {
    for (auto& pb : expand_orbit(kb, d, static_cast<std::size_t>(-1))) {
      for (auto& [pa, va] : pts) {
        std::vector<int> s(d);
        for (int t = 0; t < d; ++t) s[t] = pa.c[t] + pb.c[t];
        cand.emplace(canonicalize(s), 0);
      }
    }
  }
  SparseField<V> h;
  for (auto& [ko, z] : cand) {
    LatticePoint x0 = key_point(ko, d);
    V acc{};
    bool any = false;
    for (auto& [pa, va] : pts) {
      std::vector<int> diff(d);
      for (int t = 0; t < d; ++t) diff[t] = x0.c[t] - pa.c[t];
      auto it = big.m.find(canonicalize(diff));
      if (it == big.m.end()) continue;
      acc = acc + mul(va, it->second);
      any = true;
    }
    if (any) h.m.emplace(ko, acc);
  }
  return h;
}
}  // namespace

SparseField<cpp_int> up_convolve(const SparseField<cpp_int>& f, const SparseField<cpp_int>& g,
                                 Dim d, std::size_t guard) {
  return convolve_impl(f, g, d, guard, [](const cpp_int& a, const cpp_int& b) { return a * b; });
}

SparseField<Interval> up_convolve(const SparseField<Interval>& f, const SparseField<Interval>& g,
                                  Dim d, std::size_t guard) {
  return convolve_impl(f, g, d, guard,
                       [](const Interval& a, const Interval& b) { return a * b; });
}

Interval field_total(const SparseField<Interval>& f, Dim d) {
  Interval s(0.0);
  for (auto& [k, v] : f.m) s += v * orbit_size(k, d);
  return s;
}

Interval field_total_w2(const SparseField<Interval>& f, Dim d) {
  Interval s(0.0);
  for (auto& [k, v] : f.m) s += v * orbit_size(k, d) * Interval(double(key_norm2sq(k)));
  return s;
}

cpp_int field_total(const SparseField<cpp_int>& f, Dim d) {
  cpp_int s = 0;
  for (auto& [k, v] : f.m) s += v * orbit_size_exact(k, d);
  return s;
}

cpp_int field_total_w2(const SparseField<cpp_int>& f, Dim d) {
  cpp_int s = 0;
  for (auto& [k, v] : f.m) s += v * orbit_size_exact(k, d) * key_norm2sq(k);
  return s;
}

}  // namespace noble
