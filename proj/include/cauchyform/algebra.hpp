#ifndef CAUCHYFORM_ALGEBRA_HPP
#define CAUCHYFORM_ALGEBRA_HPP

#include "cauchyform/maxwell.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cauchyform {

// One generator of the finite-rank observable algebra: a coclosed k-form test
// current whose spatial coefficients vanish on every simplex touching the
// boundary and whose time profile is compactly supported.  Generators built
// as codifferentials are exactly coclosed; detector generators are projected
// onto the coclosed subspace and verified.
struct ObservableGenerator {
  std::string label;
  SpacetimeForm alpha;             // separable, degree k
  double coclosed_residual = 0.0;  // sampled |delta alpha| relative to |alpha|
  bool harmonic_detector = false;
  Index harmonic_class = -1;       // kernel-mode index the detector targets
};

struct GeneratorBudget {
  Index count = 6;     // total generators, detectors included
  double t0 = 0.0;     // all time profiles live inside [t0, t1]
  double t1 = 6.0;
  std::uint64_t seed = 1;
  int bump_power = 4;  // sin^{2m} exponent for the bulk generators
  Index support = 4;   // interior simplices combined per bulk generator
};

// Bulk generators are delta(beta) for random interior (k+1)-current data beta
// (coclosed by construction); when the degree-k kernel is nontrivial, the last
// generators are one detector per kernel class, built by projecting the kernel
// representative onto interior-supported coclosed cochains and giving it a
// resonance-avoiding time profile.  Throws when the budget cannot cover the
// kernel classes, naming the required minimum.
std::vector<ObservableGenerator> build_generators(const GaugeTheory& th, int k,
                                                  const GeneratorBudget& budget);

// Structure constants W_ij = (alpha_i, G~ alpha_j) of the commutator bracket.
struct PairingMatrix {
  Mat w;
  std::vector<std::string> labels;
  BCTag tag = BCTag::Dirichlet;
  double antisymmetry = 0.0;  // ||W + W^T||_F / ||W||_F (0 when W = 0)
};

PairingMatrix pairing_matrix(const GaugeTheory& th,
                             const std::vector<ObservableGenerator>& gens);

// Center detection.  Generators whose pairings vanish against every candidate
// (all W columns and all static kernel solutions) represent the zero class and
// are projected out first; the kernel of the remaining W is the radical, and
// its dimension is compared against the Betti number of the matching
// (absolute or relative) cohomology.
struct RadicalReport {
  Vec singular_values;  // of W restricted to the non-null generators
  Index rank = 0;
  Index radical_dim = 0;            // kernel directions visible to static solutions
  Mat radical_basis;                // all-generator coordinates, one column each
  std::vector<char> quotient_null;  // per generator: pairs ~ 0 with everything
  Mat harmonic_pairings;            // generators x kernel classes
  Index matched_betti = 0;          // topological prediction for radical_dim
  double gap = 0.0;                 // singular-value ratio across the rank cut
  bool decided = true;              // gap >= 10 (or no cut at all)
  std::string note;
};

RadicalReport radical(const GaugeTheory& th,
                      const std::vector<ObservableGenerator>& gens,
                      const PairingMatrix& pm);

// Separating / non-redundancy diagnostics against a finite solution family.
// A solution pairing below threshold with every generator must be gauge
// trivial (dA ~ 0); a generator pairing below threshold with the spanning
// family (G~ images of the generators, static kernel solutions, and the given
// solutions) is quotient-null.  Rank of the stacked pairings guards against a
// spanning family that is too small.
struct OptimalityReport {
  bool separating = true;
  bool non_redundant = true;
  Index spanning_rank = 0;
  Index expected_rank = 0;
  std::vector<std::string> gauge_trivial_solutions;
  std::vector<std::string> quotient_null_generators;
  std::vector<std::string> violations;
  Mat solution_pairings;  // generators x solutions
};

OptimalityReport optimality_check(const GaugeTheory& th,
                                  const std::vector<ObservableGenerator>& gens,
                                  const PairingMatrix& pm,
                                  const std::vector<GaugePotential>& solutions,
                                  double t_lo, double t_hi,
                                  const std::vector<std::string>& solution_labels = {});

// Degree-2 truncation of the commutation-relations quotient: reduces the word
// u (x) v - v (x) u by the ideal relation e_i (x) e_j - e_j (x) e_i = i W_ij.
// Returns the scalar coefficient of the identity (the factor multiplying i).
double ccr_commutator_coefficient(const Mat& w, const Vec& u, const Vec& v);

}  // namespace cauchyform

#endif
