#ifndef CAUCHYFORM_BOUNDARY_HPP
#define CAUCHYFORM_BOUNDARY_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cauchyform/dec_core.hpp"
#include "cauchyform/mesh.hpp"

namespace cauchyform {

enum class BCTag {
  Dirichlet,
  BoxTangential,   // t = 0 essential, tδ = 0 natural (relative realization)
  BoxNormal,       // n = 0 and nd = 0 natural (absolute realization)
  RobinTangential, // f >= 0
  RobinNormal,     // f <= 0
  MaxwellTangential,
  MaxwellNormal,
};

BCTag parse_bc_tag(const std::string& name);  // "dirichlet", "box_tangential", ...
std::string bc_tag_name(BCTag tag);

struct BCKind {
  BCTag tag = BCTag::Dirichlet;
  Vec f;  // Robin data, one value per boundary top-simplex; empty otherwise

  void validate(const SimplicialComplex& c) const;
};

// Trace machinery over one complex: tangential restrictions, weak normal traces,
// the strong codifferential (interior-restricted mass solve) and its boundary
// recovery variant. Consistent Whitney masses throughout; this is the Stokes layer.
class BoundaryOps {
 public:
  explicit BoundaryOps(const SimplicialComplex& c);

  const SimplicialComplex& complex() const { return *c_; }
  const BoundaryComplex& boundary() const { return bdc_; }

  // selection of k-simplices not contained in ∂Σ (the relative subcomplex)
  const SpMat& interior_selector(int k) const { return P_[k]; }
  // 0/1 restriction to boundary k-simplices, rows indexed by the boundary complex
  const SpMat& trace_matrix(int k) const { return T_[k]; }
  const SpMat& parent_mass(int k) const { return M_[k]; }
  const SpMat& boundary_mass(int k) const { return Mb_[k]; }

  Vec tangential_trace(int k, const Vec& omega) const;
  // δ_s: degree k -> k-1, zero on boundary (k-1)-simplices
  Vec strong_codifferential(int k, const Vec& omega) const;
  // δ_c: δ_s with boundary (k-1)-dofs filled by nearest-interior recovery
  Vec recovery_codifferential(int k, const Vec& omega) const;
  // weak normal trace ν: degree k -> boundary (k-1)-form, via boundary mass solve
  Vec normal_trace(int k, const Vec& omega) const;
  Mat normal_trace_matrix(int k) const;  // dense ν operator (desk scale)

  // (dα, β)_{k+1} − (α, δ_s β)_k for α of degree k; equals ⟨tα, ν_β⟩_∂ exactly
  double green_defect(int k, const Vec& alpha, const Vec& beta) const;

 private:
  const SimplicialComplex* c_;
  BoundaryComplex bdc_;
  std::array<SpMat, 3> P_, T_, M_, Mb_;
  std::array<std::shared_ptr<Eigen::SimplicialLDLT<SpMat>>, 3> interior_solver_, bmass_solver_;
  std::array<std::vector<Index>, 3> recovery_;  // boundary simplex -> nearest interior simplex
};

// Free-function forms of the trace/defect operations (construct BoundaryOps inside).
Vec tangential_trace(const SimplicialComplex& c, int k, const Vec& omega);
Vec normal_trace(const SimplicialComplex& c, int k, const Vec& omega);
double green_defect(const SimplicialComplex& c, int k, const Vec& alpha, const Vec& beta);

// One spatial degree of a constrained wave operator: lumped masses, kept-dof
// selection and the symmetric PSD stiffness of the chosen realization.
struct ConstrainedBlock {
  int degree = 0;
  SpMat P;      // kept × full selection
  SpMat A;      // stiffness on kept dofs
  Vec Mlump;    // diagonal mass on kept dofs
};

struct ConstrainedOperator {
  const SimplicialComplex* mesh = nullptr;
  BCKind bc;
  int k = 0;                             // spacetime form degree
  std::vector<ConstrainedBlock> blocks;  // spatial degrees k-1 (if k>0), then k

  const ConstrainedBlock& block(int degree) const;
  Index total_dofs() const;
};

ConstrainedOperator build_constrained(const SimplicialComplex& c, int k, const BCKind& bc);

// Restricted coboundary / codifferential between the two kept spaces (degree k-1 -> k
// and back); exact intertwiners of the block Laplacians for ∥ and ⊥ realizations.
SpMat bc_coboundary(const ConstrainedOperator& op);
SpMat bc_codifferential(const ConstrainedOperator& op);

// (S_Θ α, β)_M − (α, S_Θ β)_M on stacked block vectors; bc/degree mismatch is an error.
double box_green_defect(const ConstrainedOperator& op_alpha, const Vec& alpha,
                        const ConstrainedOperator& op_beta, const Vec& beta);

struct TripleIdentityReport {
  double interior_max = 0;      // |lhs − rhs| on interior-supported pairs
  double diagonal_max = 0;      // |identity| on (f, f) pairs
  double smooth_coarse = 0;     // max |lhs − rhs| for smooth interpolants, coarse mesh
  double smooth_refined = 0;    // same on the refined mesh
  double decay_factor = 0;      // coarse / refined (large is good)
  bool pass = false;
};

// Boundary-triple identity for the non-symmetric strong-form operator
// S* = δ_s d + d δ_c with γ₀ = (ν, t) and γ₁ = (tδ_c, −ν∘d) per block.
TripleIdentityReport triple_identity_check(const SimplicialComplex& coarse, int k, int samples,
                                           std::uint64_t seed);

struct TraceSurjectivityReport {
  Index rows = 0;
  Index rank = 0;
  bool full_row_rank = false;
};
TraceSurjectivityReport trace_surjectivity(const SimplicialComplex& c, int k);

}  // namespace cauchyform

#endif
