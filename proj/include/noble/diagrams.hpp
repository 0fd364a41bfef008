#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "noble/green.hpp"
#include "noble/interval.hpp"
#include "noble/lattice.hpp"
#include "noble/walks.hpp"

namespace noble {

enum class Model { lattice_trees, lattice_animals };
enum class BoundMode { exact, monotone };

// Index (n, l, S) of one weighted-bubble component of the third bootstrap
// function: sup_{x in S} sum_y |y|^2 G(y) (G^{*n} * D^{*l})(x-y) / c_{n,l,S}.
// S is either {0} or the complement of the l2 unit ball.
struct WeightedIndex {
  int n, l;
  bool at_origin;
};
const std::array<WeightedIndex, 10>& weighted_index_set();

// Everything the diagrammatic bounds need to know about the current bootstrap
// state: the model, the dimension, the assumed bounds Gamma_i on the three
// bootstrap functions, and the evaluation policy.
struct BootstrapParams {
  Model model = Model::lattice_trees;
  Dim d = 16;
  BoundMode mode = BoundMode::exact;
  Interval Gamma1{1.0}, Gamma2{1.0}, Gamma3{1.0};
  double c_mu = 1.002;           // weight splitting the two branches of f_1
  std::array<double, 10> c3{};   // normalizations c_{n,l,S}, weighted_index_set order
  int M = 10;                    // steps resolved explicitly before integral tails

  // scalar consequences of f_1 <= Gamma1 (upper bounds)
  Interval mubar() const;  // z g_z       <= Gamma1/(2d-1)
  Interval mu() const;     // z g^iota_z  <= Gamma1/(c_mu (2d-1))
  Interval g() const;      // g_z         <= e Gamma1        (uses z >= 1/((2d-1)e))
  Interval giota() const;  // g^iota_z    <= e Gamma1 / c_mu
  // per-step weight used when a walk step is extracted from a line; this is
  // the z g^iota bound without the c_mu sharpening, matching the printed
  // numeric bounds downstream results are pinned to
  Interval step() const { return mubar(); }
  Interval r2d() const;  // 2d/(2d-1), the step weight times 2d at Gamma1 = 1

  std::string cache_key() const;
};

// Exact count of composite walks through prescribed corners: the number of
// pairs (w, split) where w is a self-avoiding walk of the table's kind from 0,
// split cuts it into lines.size() consecutive lines, line i has length >= (or
// ==) its constraint, and ends at corners[i] when that corner is pinned
// (nullopt corners are summed over the lattice). Corners are explicit lattice
// points over the first few coordinates. Returns counts[total length].
// For the vertex kind a walk pinned to end at the origin may close on it
// (and stops there): closed composites are genuine polygons.
struct LineConstraint {
  int l = 0;
  bool exact = false;
};
std::vector<cpp_int> composite_counts(WalkKind kind, Dim d,
                                      const std::vector<LineConstraint>& lines,
                                      const std::vector<std::optional<std::vector<int>>>& corners,
                                      int Lmax);

// ---------------------------------------------------------------------------
// Line bounds. Every two-point function the expansion coefficients consume is
// carried as a finitely supported explicit part (exact walk counts times
// certified step weights) plus Green-integral tails:
//   h(x) <= walk(x) + sum_j coef_j I_{n_j, m_j}(x).
// All parts are nonnegative pointwise bounds, so lines can be paired and
// summed term by term.
// ---------------------------------------------------------------------------
struct LineBound {
  SparseField<Interval> walk;
  struct KPart {
    Interval coef;
    int n, m;
  };
  std::vector<KPart> kparts;

  Bnd eval(Dim d, const Key& x) const;    // pointwise value
  Bnd sup_far(Dim d, int l1min) const;    // sup over |x|_1 >= l1min
  Interval walk_total(Dim d) const;       // sum_x of the explicit part only
};
// sum_x a(x) b(x): walk*walk pairs exactly per orbit, walk*I through table
// lookups, I*I' -> I(n+n', m+m', 0). Both factors must be pointwise bounds of
// nonnegative functions.
Bnd pair_at_origin(const LineBound& a, const LineBound& b, Dim d);
// sup over |x|_1 >= l1min of I(n, m, x), closed by coordinatewise
// monotonicity of the pure Green powers after discharging the D-steps.
Interval far_green_sup(Dim d, int n, int m, int l1min);

// Certified bounds on the one- and two-point functions implied by the
// bootstrap assumption, uniformly on [z_I, z_c].
struct GBoundFamily {
  BootstrapParams p;
  Interval mu, mubar, g, giota;  // scalar upper bounds
  Interval beta;                 // g/g^iota = 1/(1 - G(e)) upper bound

  LineBound gtilde_line(int l = 0, bool exact_len = false) const;
  LineBound gbar_line() const;

  Bnd gtilde(const Key& x, int l = 0, bool exact_len = false) const;
  Bnd gbar(const Key& x) const;
};
GBoundFamily make_gbounds(const BootstrapParams& p);

// ---------------------------------------------------------------------------
// Repulsive diagrams: chains of two-point lines whose underlying paths are
// mutually bond-disjoint (and whose sausages avoid each other), pinned at
// prescribed corners with per-line length constraints. The bound resolves the
// composite walk exactly below M steps — self-avoidance of the composite is
// what the naive product of lines throws away — and closes the remainder with
// Green-integral tails: a term for each count n of lines left unextracted,
//   T_n (2d step)^M Gamma2^n I_{n,M}(x_last),
// T_n the number of admissible length assignments of the extracted lines with
// total <= M-2.
// ---------------------------------------------------------------------------
struct RepulsiveDiagram {
  std::vector<LineConstraint> lines;                      // 1..5 lines
  std::vector<std::optional<std::vector<int>>> corners;   // per line; nullopt = summed
};
Bnd repulsive_bound(const BootstrapParams& p, const RepulsiveDiagram& dia);

// Double connections (lattice animals only; identically zero for trees):
// bound on sum over animals containing 0 and x in which 0 and x are doubly
// connected with both connections of length >= dmin. Minimum of the split
// into two mutually avoiding planted lines (resolved as a marked-circuit
// count below M) and the coarse one-step splits, each carrying the 1/2 from
// the interchangeability of the two connections.
Bnd double_connection_bound(const BootstrapParams& p, int dmin,
                            const std::vector<int>& x);

// One component of the third bootstrap function:
//   sup_{x in S} sum_y |y|^2 G(y) (G^{*n} * D^{*l})(x - y),
// G the normalized two-point function. gamma2 is the pointwise transform
// domination constant for G (Gamma2 during improvement, 1 at z_I where
// G <= B holds pointwise). The sup over the unbounded region is closed by a
// coordinatewise-monotone shell envelope of the Green integrals.
Bnd weighted_two_point_bound(Dim d, const Interval& gamma2, int n, int l,
                             bool at_origin);

// Exact expansion of sum_y |y|^2 C(y) (C^{*n} * D^{*l})(x-y) into Green
// integrals; exposed for cross-checks against GreenTable::weighted_chain.
Interval weighted_chain_terms(Dim d, int n, int l, const Key& x);

// (D_2 * f)(x) support: orbit transitions for the two-step displacements
// x +- 2 e_s; counts sum to 2d.
std::vector<std::pair<Key, long long>> two_step_transitions(const Key& k, Dim d);

// ---------------------------------------------------------------------------
// The bound-improvement cascade for the square diagram of lattice trees at
// the initialization point: five successive upper bounds on the basic
// correction sum, each strictly inside the previous one. l2: plain product of
// full two-point lines. l3: lines forced through the origin trivialize.
// l4: one-point weight reallocated so only one line keeps the full factor.
// l5: backtracking steps removed from the loop. l6: the loop resolved as a
// genuine self-avoiding polygon below M steps. Values are certified
// enclosures (l6 an upper bound).
// ---------------------------------------------------------------------------
struct ChainLevels {
  Interval l2, l3, l4, l5;
  Bnd l6;
};
ChainLevels chain_levels(Dim d, Model model);

}  // namespace noble
