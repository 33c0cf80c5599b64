#ifndef JLLB_WELCH_HPP
#define JLLB_WELCH_HPP

#include "jllb/geometry.hpp"

namespace jllb {

// Lower bound on the coherence of any n unit vectors in R^m:
// max(0, (1/(n-1)) * (n / binom(m+k-1, k) - 1))^(1/(2k)).
// Clamped to 0 where the bound is vacuous.
double welch_bound(int n, int m, int k);

// Maximum |<x_i, x_j>| over distinct pairs; requires unit vectors
// (within 1e-9). Sequences with fewer than two points have coherence 0.
double coherence(const PointSequence& X);

// The m+1 vertices of the regular simplex, centered and normalized: unit
// vectors with pairwise inner product exactly -1/m. They span an
// m-dimensional subspace and meet the k = 1 Welch bound with equality.
PointSequence regular_simplex(int m);

} // namespace jllb

#endif // JLLB_WELCH_HPP
