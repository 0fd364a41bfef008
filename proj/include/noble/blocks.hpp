#pragma once

#include <array>
#include <vector>

#include "noble/diagrams.hpp"

namespace noble {

// Shared-line labels between consecutive blocks of a diagram chain run over
// {-2,-1,0,1,2}; vectors and matrices are indexed by label+2.
using Vec5 = std::array<Bnd, 5>;
using Mat5 = std::array<std::array<Bnd, 5>, 5>;

constexpr int li(int label) { return label + 2; }

// A mixture bound: h(x) <= sum_a pcoef[a] p_a(x) + sum_j coef_j I_{n_j,m_j}(x)
// with p_a the normalized a-step simple-random-walk distribution. All
// coefficients are nonnegative, so products and the weighted-pair identities
// below stay one-sided. Unlike LineBound, every term has an explicit Fourier
// transform, which is what the |x|^2-weighted sums need.
struct Mix {
  std::vector<Interval> pcoef;           // pcoef[a] multiplies p_a
  std::vector<LineBound::KPart> iparts;  // coef * I_{n,m}
};

// Two-point mixtures. mix_gtilde dominates the one-per-site flavour (largest
// of the three); plain and bar-normalized lines are <= it pointwise, so all
// weighted lines route through the same builder. l/exact_len constrain the
// line length as in gtilde_line.
Mix mix_gtilde(const GBoundFamily& gb, int l = 0, bool exact_len = false);

Mix mix_scale(Mix a, const Interval& c);
Mix mix_add(const Mix& a, const Mix& b);
Mix mix_convolve(Dim d, const Mix& a, const Mix& b);
Mix mix_shift_d(Dim d, const Mix& a, int steps = 1);  // convolve with D^{*steps}

Bnd mix_eval(Dim d, const Mix& a, const Key& x);
Bnd mix_sup_far(Dim d, const Mix& a, int l1min);
Bnd mix_sup(Dim d, const Mix& a, int scan_radius = 6);

// sum_y |y|^2 a(y) b(t-y), through the exact transform identities
//   -Lap D^a = a D^a - a(a-1)/(2d) D^{a-2}(1-D_2),
//   -Lap C^n = n gam C^{n+1} D - n(n+1) gam^2/(2d) C^{n+2}(1-D_2),
// gam = 2d/(2d-1), plus a one-sided |u+v|^2 <= 2|u|^2+2|v|^2 split when the
// weighted atom itself is a convolution I_{n,m} with m > 0.
Bnd mix_weighted_pair(Dim d, const Mix& a, const Mix& b, const Key& t);
// upper bound of the same quantity over all |t|_1 >= l1min
Bnd mix_weighted_pair_far(Dim d, const Mix& a, const Mix& b, int l1min);
// sup over all pins: canonical scan up to scan_radius plus the far envelope
Bnd mix_weighted_sup(Dim d, const Mix& a, const Mix& b, int scan_radius = 6);

// Aggregated diagram elements. Row/column index semantics:
//   A[l][m]      sup_v sum_{x,y} A^{l,m}(0,v,x,y)
//   C[l][m]      sup_{v,y} sum_x C^{l,m}(0,v,x,x+y)
//   P, Piota     column sums of the fundamental block (plain / directed-start)
//   Eclosed[m]   sum_{x,y} A^{0,m}(0,0,x,y)     (chain end, closed diagrams)
//   Eopen[m]     sum_{x,y} A^{m,0}(0,0,x,y)     (chain end, open diagrams)
//   DeltaStart   weighted initial block totals, sup over the end offset
//   DeltaEnd[l]  sup_v sum_x C^{l,0}(0,v,x,x)   (weighted terminal block)
//   DeltaIota*   weighted directed-start blocks (I: |x|^2, II: |x-e|^2)
struct BlockSet {
  Mat5 A{};
  Mat5 C{};
  Vec5 P{}, Piota{};
  Vec5 Eclosed{}, Eopen{};
  Vec5 DeltaStart{}, DeltaEnd{}, DeltaIotaI{}, DeltaIotaII{};
};

BlockSet assemble_blocks(const BootstrapParams& p);

// Entrywise-certified Neumann sums of a nonnegative 5x5 matrix:
//   S1 = sum_{K>=0} A^K,  S2 = sum_{K>=0} (K+1) A^K = S1^2.
// Tails are certified through a scaling vector w > 0 with theta = the
// largest ratio (Aw)_i / w_i: entrywise (A^K)_{ij} <= theta^K w_i / w_j.
// ok is false (and the sums are unusable) when no theta < 1 is certified.
struct GeomSeries {
  Mat5 S1{}, S2{};
  double theta = 1.0;
  std::array<double, 5> w{};
  bool ok = false;
};

GeomSeries geometric_sum(const Mat5& A, int terms = 60);

Vec5 mat_vec(const Mat5& A, const Vec5& x);
Vec5 vec_mat(const Vec5& x, const Mat5& A);
Mat5 mat_mul(const Mat5& A, const Mat5& B);
Mat5 mat_add(const Mat5& A, const Mat5& B);
Bnd dot(const Vec5& a, const Vec5& b);

}  // namespace noble
