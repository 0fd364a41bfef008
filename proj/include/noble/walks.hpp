#pragma once
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "noble/lattice.hpp"

namespace noble {

enum class WalkKind { SRW, NBW, SAW, BOND_SAW };

// BOND_SAW flavor: undirected forbids reusing a bond in either direction,
// directed only forbids repeating the same oriented step.
enum class BondVariant { undirected, directed };

// Exact per-point counts c_n(x) for all n <= L, as orbit fields.
// SRW/NBW run on orbit recursions (any d, L <= 12). SAW/BOND_SAW run a
// template DFS whose cost is d-independent (L <= 10; enough for every
// explicit diagram shell, which needs L <= 9).
struct WalkTable {
  WalkKind kind;
  Dim d;
  std::vector<SparseField<cpp_int>> c;  // c[n], n = 0..L
};

WalkTable count_walks(WalkKind kind, Dim d, int L,
                      BondVariant bv = BondVariant::undirected);

// c_L(x)/(number of length-L walks of this kind from 0), exact
cpp_rat normalized_count(WalkKind kind, Dim d, int L, const Key& x,
                         BondVariant bv = BondVariant::undirected);

// Marked circuits: q[{i,j}](x) = number of closed walks of length i+j from 0
// whose position after step i is x (equivalently, ordered pairs of paths
// 0->x of length i and x->0 of length j that are jointly self-avoiding in the
// walk kind's sense). Only the self-avoiding kinds are supported; this is the
// exact count of line splittings used by loop-diagram bounds. i,j >= 1.
struct CircuitTable {
  WalkKind kind;
  Dim d;
  std::map<std::pair<int, int>, SparseField<cpp_int>> q;
  const SparseField<cpp_int>& at(int i, int j) const;
};

CircuitTable circuit_marks(WalkKind kind, Dim d, int Lmax,
                           BondVariant bv = BondVariant::undirected);

// Connected bond sets (lattice animals; trees if acyclic) with n bonds whose
// vertex set contains the origin, enumerated exactly once (Redelmeier-style).
// The n = 0 animal is the single vertex at the origin. `filter`, if given,
// sees the edge list as pairs of endpoint vectors and can reject.
using EdgeList = std::vector<std::pair<std::vector<int>, std::vector<int>>>;
cpp_int enumerate_animals(Dim d, int nbonds, bool trees_only,
                          const std::function<bool(const EdgeList&)>& filter = {});

// Exact comparison of the rooted-tree count t_n(0) against the closed-form
// Poisson-type bound 2d(2d-1)^{n-1}(n+1)^n/(n+1)!  (n >= 1).
// Returns (t_n, bound) as exact rationals; t_n <= bound must hold.
std::pair<cpp_rat, cpp_rat> check_count_bound(Dim d, int n);

}  // namespace noble
