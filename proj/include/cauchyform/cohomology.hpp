#ifndef CAUCHYFORM_COHOMOLOGY_HPP
#define CAUCHYFORM_COHOMOLOGY_HPP

#include <cstdint>
#include <vector>

#include "cauchyform/boundary.hpp"
#include "cauchyform/mesh.hpp"

namespace cauchyform {

// Exact rank of an integer matrix by fraction-free (Bareiss) elimination.
// Incidence matrices are totally unimodular, so intermediate entries stay small;
// overflow is checked and reported rather than silently wrapped.
Index integer_rank(std::vector<std::vector<std::int64_t>> m);

// Betti numbers b_0..b_n from exact integer ranks of the coboundary maps.
std::vector<Index> betti_absolute(const SimplicialComplex& c);

// Relative Betti numbers of the subcomplex of cochains vanishing on ∂Σ.
std::vector<Index> betti_relative(const SimplicialComplex& c);

struct BettiReport {
  std::vector<Index> absolute;
  std::vector<Index> relative;
  std::vector<Index> boundary;    // Betti numbers of ∂Σ (empty when ∂Σ = ∅)
  bool lefschetz_ok = false;      // b_k^rel == b_{n-k}
  std::int64_t les_alternating_sum = 0;  // Σ (−1)^k (b_k^rel − b_k + b_k(∂Σ)), must be 0
};

BettiReport cohomology_report(const SimplicialComplex& c);

struct HarmonicBasis {
  Mat basis;        // full-cochain embedding, one column per kernel vector, M̂-orthonormal
  Vec kernel_eigenvalues;
  double clip = 0;  // kernel threshold actually used
  bool ambiguous = false;  // smallest nonzero eigenvalue within 10x of the clip
};

// Kernel of the constrained degree block under the given boundary condition.
HarmonicBasis harmonic_basis(const SimplicialComplex& c, int degree, const BCKind& bc);

}  // namespace cauchyform

#endif
