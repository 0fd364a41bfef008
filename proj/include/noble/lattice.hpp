#pragma once
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "noble/interval.hpp"

namespace noble {

using Dim = int;
using cpp_int = boost::multiprecision::cpp_int;
using cpp_rat = boost::multiprecision::cpp_rational;

// A point of Z^d, explicit-coordinate lane (only used at small d / small radius).
struct LatticePoint {
  std::vector<int> c;
};

// Signed axis: axis in [0,d), pos = towards +e_axis.
struct Direction {
  int axis = 0;
  bool pos = true;
};

// Orbit key: canonical representative of x under coordinate permutations and
// sign flips. Stored as the multiset of nonzero |x_i| sorted descending, one
// byte per entry, trailing zeros dropped. Keys are dimension-free, so caches
// keyed by them are shared across d.
using Key = std::string;

Key canonicalize(const std::vector<int>& x);
Key key_of(std::initializer_list<int> x);
inline Key origin_key() { return Key(); }

int key_norm1(const Key& k);
int key_norm2sq(const Key& k);
int key_supnorm(const Key& k);
// canonical representative as a point (first entries = key magnitudes)
LatticePoint key_point(const Key& k, Dim d);
std::string key_str(const Key& k);  // "[2,1,1]" for logs/serialization
Key key_parse(const std::string& s);

// |orbit(k)| in Z^d: 2^r * d! / ((d-r)! * prod multiplicity!), exact.
cpp_int orbit_size_exact(const Key& k, Dim d);
Interval orbit_size(const Key& k, Dim d);

// outward-rounded enclosure of an exact integer / rational
Interval enclose(const cpp_int& v);
Interval enclose(const cpp_rat& v);

// all keys with |x|_1 <= radius (entries <= 255 by construction)
std::vector<Key> keys_in_ball(int radius);

// concrete orbit points (first `d` axes); guarded, meant for small d
std::vector<LatticePoint> expand_orbit(const Key& k, Dim d, std::size_t guard = 5'000'000);

// The 2d neighbor transitions of the canonical representative of k, grouped:
// result (k', c) means: exactly c of the 2d lattice neighbors x0 +- e_s of x0
// have orbit key k'. Sum of c equals 2d.
std::vector<std::pair<Key, long long>> neighbor_transitions(const Key& k, Dim d);

// Orbit-symmetric sparse field on Z^d keyed by orbit.
template <class V>
struct SparseField {
  std::unordered_map<Key, V> m;

  V get(const Key& k) const {
    auto it = m.find(k);
    return it == m.end() ? V{} : it->second;
  }
  void add(const Key& k, const V& v) {
    auto [it, fresh] = m.emplace(k, v);
    if (!fresh) it->second = it->second + v;
  }
  bool empty() const { return m.empty(); }
  std::size_t size() const { return m.size(); }
};

// g(x) = sum_{s} [f(x+e_s) + f(x-e_s)]  (un-normalized step; D*f = g/(2d)).
// Exact on orbit keys via neighbor_transitions.
template <class V>
SparseField<V> step_gather(const SparseField<V>& f, Dim d) {
  static_assert(std::is_same_v<V, Interval> || std::is_floating_point_v<V>,
                "use step_gather_exact for integer fields");
  SparseField<V> g;
  std::unordered_map<Key, char> cand;
  for (const auto& [k, v] : f.m) {
    cand.emplace(k, 0);
    for (auto& [k2, c] : neighbor_transitions(k, d)) cand.emplace(k2, 0);
  }
  for (const auto& [k, z] : cand) {
    V acc{};
    bool any = false;
    for (auto& [k2, c] : neighbor_transitions(k, d)) {
      auto it = f.m.find(k2);
      if (it == f.m.end()) continue;
      acc = acc + it->second * V(static_cast<double>(c));
      any = true;
    }
    if (any) g.m.emplace(k, acc);
  }
  return g;
}

// exact-integer specialization (cpp_int values, exact multiplication)
SparseField<cpp_int> step_gather_exact(const SparseField<cpp_int>& f, Dim d);

// Full convolution (f*g)(x) = sum_y f(y) g(x-y) on orbit fields, by expanding
// f's orbits to concrete points. Guarded: throws if the expansion exceeds
// `guard` points. The production pipeline only ever convolves through
// step_gather; this general form exists for cross-checks at small d.
SparseField<cpp_int> up_convolve(const SparseField<cpp_int>& f,
                                 const SparseField<cpp_int>& g, Dim d,
                                 std::size_t guard = 5'000'000);
SparseField<Interval> up_convolve(const SparseField<Interval>& f,
                                  const SparseField<Interval>& g, Dim d,
                                  std::size_t guard = 5'000'000);

// sum_x f(x) and sum_x |x|^2 f(x) over Z^d (orbit-weighted totals)
Interval field_total(const SparseField<Interval>& f, Dim d);
Interval field_total_w2(const SparseField<Interval>& f, Dim d);
cpp_int field_total(const SparseField<cpp_int>& f, Dim d);
cpp_int field_total_w2(const SparseField<cpp_int>& f, Dim d);

}  // namespace noble
