#ifndef CAUCHYFORM_MAXWELL_HPP
#define CAUCHYFORM_MAXWELL_HPP

#include <map>
#include <utility>
#include <vector>

#include "cauchyform/boundary.hpp"
#include "cauchyform/propagator.hpp"

namespace cauchyform {

// Spacetime k-forms on the product cylinder (time line) x (spatial complex)
// split into two spatial blocks:
//
//   F = dt ^ F_t + F_s,   F_t of spatial degree k-1,   F_s of spatial degree k.
//
// Both blocks are time-dependent cochains on the boundary-conditioned dof
// sets.  A block is represented as a sum of a modal field (coefficients on a
// fixed eigenbasis, exact trigonometric time dependence) and a list of
// separable terms (fixed kept-dof cochain times an exact time profile).

struct SeparableTerm {
  Vec spatial;                  // kept-dof cochain
  timecalc::PiecewiseTrig profile;
};

struct BlockField {
  const ModeBasis* basis = nullptr;   // null iff the spatial degree is absent
  ExactModeField modal;               // empty coeff list means no modal part
  std::vector<SeparableTerm> parts;

  bool absent() const { return basis == nullptr; }
  bool has_modal() const { return !modal.coeff.empty(); }
  bool trivial() const { return !has_modal() && parts.empty(); }
  Index dofs() const;
  Vec eval(double t) const;           // kept-dof value at time t
  Vec eval_dt(double t) const;
  Vec eval_dtt(double t) const;
};

struct SpacetimeForm {
  int degree = 0;        // spacetime degree k
  BlockField tpart;      // spatial degree k-1
  BlockField spart;      // spatial degree k
};

// A gauge potential is a base solution plus accumulated gauge shifts; the
// represented field is  A = base + sum_i d(shifts[i]).  Shifts are stored
// unexpanded so that exact pairings can use the adjoint identity
// (alpha, d chi) = (delta alpha, chi) instead of differentiating chi.
struct GaugePotential {
  SpacetimeForm base;
  std::vector<SpacetimeForm> shifts;
};

// Boundary-conditioned spacetime field theory on a fixed spatial complex:
// one constrained block, eigenbasis, and transfer matrices per spatial
// degree 0..n, all realizing the same boundary condition family.
class GaugeTheory {
 public:
  GaugeTheory(const SimplicialComplex& c, const BCKind& bc);
  GaugeTheory(const SimplicialComplex& c, BCTag tag);

  const SimplicialComplex& complex() const { return *c_; }
  const BCKind& bc() const { return bc_; }
  BCTag tag() const { return bc_.tag; }
  int dim() const { return n_; }
  bool has_degree(int j) const { return j >= 0 && j <= n_; }

  const ConstrainedBlock& block(int j) const;
  const ModeBasis& basis(int j) const;
  // kept-dof exterior derivative, kept (j-1)-dofs -> kept j-dofs
  const SpMat& coboundary(int j) const;
  // lumped-metric adjoint of coboundary(j), kept j-dofs -> kept (j-1)-dofs
  const SpMat& codifferential(int j) const;
  // <mode_a^(j), d mode_b^(j-1)> in the lumped metric of degree j
  const Mat& d_modes(int j) const;
  // discrete normal trace matrix on full j-cochains (kept dofs for this
  // family coincide with full dofs in the natural realization)
  const Mat& normal_trace(int j) const;
  const BoundaryOps& traces() const { return *bops_; }

  Vec to_modes(int j, const Vec& kept) const;
  double block_norm(int j, const Vec& kept) const;  // lumped-metric norm

 private:
  void build();
  const SimplicialComplex* c_;
  BCKind bc_;
  int n_ = 0;
  std::vector<ConstrainedBlock> blocks_;
  std::vector<ModeBasis> bases_;
  std::vector<SpMat> cob_, codif_;
  mutable std::map<int, Mat> dmodes_;
  mutable std::map<int, Mat> ntrace_;
  std::unique_ptr<BoundaryOps> bops_;
};

// ---------------------------------------------------------------- building

SpacetimeForm make_form(const GaugeTheory& th, int degree);
SpacetimeForm separable_form(const GaugeTheory& th, int degree,
                             std::vector<SeparableTerm> tparts,
                             std::vector<SeparableTerm> sparts);

// Exact spacetime calculus on separable-list forms (modal content rejected;
// use the samplewise evaluators for mixed fields).
SpacetimeForm coboundary_separable(const GaugeTheory& th, const SpacetimeForm& f);
SpacetimeForm codifferential_separable(const GaugeTheory& th, const SpacetimeForm& f);

// Exact codifferential of a general (modal and/or separable) form.  The
// result's modal coefficient functions can carry many frequencies; intended
// for one-shot constructions, not inner loops.
SpacetimeForm modal_codifferential(const GaugeTheory& th, const SpacetimeForm& f);

// Causal/retarded/advanced propagation of a separable-list source, blockwise.
SpacetimeForm green_form(const GaugeTheory& th, const SpacetimeForm& source,
                         GreenKind kind);

// ----------------------------------------------------------- sample algebra

// Value of A = base + sum d(shifts) at time t; returns {t-block, s-block}.
std::pair<Vec, Vec> eval_potential(const GaugeTheory& th, const GaugePotential& a,
                                   double t);
std::pair<Vec, Vec> eval_potential_dt(const GaugeTheory& th, const GaugePotential& a,
                                      double t);
std::pair<Vec, Vec> eval_potential_dtt(const GaugeTheory& th, const GaugePotential& a,
                                       double t);

// ------------------------------------------------------------------ windows

// Smooth monotone split function pair (eta, 1 - eta) with eta == 0 before t0
// and eta == 1 after t1, plus first and second derivatives.
struct TemporalWindow {
  double t0 = 0, t1 = 1;
  timecalc::PiecewiseTrig eta, eta_p, eta_pp;
};
TemporalWindow temporal_split(double t0, double t1);

// ------------------------------------------------------------------ reports

struct OnShellReport {
  double field_scale = 0;      // max_t (|A_s| + |A_t|) in lumped norms
  double maxwell_residual = 0;  // |delta d A| relative, max over samples
  double lorenz_residual = 0;   // |delta A| relative
  double wave_residual = 0;     // |(d^2/dt^2 + L) A| relative, blockwise
  double boundary_residual = 0; // essential trace (tangential) / |nA| (normal)
  double flux_residual = 0;     // |n dA| relative (normal family; informational)
};

OnShellReport maxwell_residual(const GaugeTheory& th, const GaugePotential& a,
                               double t_lo, double t_hi, int nsamples);

// --------------------------------------------------------------- gauge fixes

struct LorenzFixReport {
  GaugePotential fixed;
  SpacetimeForm chi;            // total transformation, fixed = input + d chi
  OnShellReport before, after;
  double trace_kill_residual = 0;  // least-squares residual of trace removal
  int rounds = 0;                  // number of correction steps that acted
};

// Tangential family: one-step construction.  chi solves the inhomogeneous
// wave equation with source -delta A via a past/future split of the
// potential, so that delta(A + d chi) vanishes identically and the essential
// boundary condition is preserved automatically.  Requires a potential whose
// essential trace already vanishes (kept-dof representation enforces it).
LorenzFixReport lorenz_fix_tangential(const GaugeTheory& th, const GaugePotential& a,
                                      const TemporalWindow& w, double t_lo,
                                      double t_hi, int nsamples);

// Normal family: two-step construction.  Step one removes the natural trace
// channel-by-channel through a minimum-norm least-squares gauge shift; step
// two restores the Lorenz condition by causal propagation of the induced
// codifferential defect.  The exterior derivative of a shift never changes
// the trace of the field strength, so the input must already satisfy the
// field-strength trace condition up to discretization error.
LorenzFixReport lorenz_fix_normal(const GaugeTheory& th, const GaugePotential& a,
                                  const TemporalWindow& w, double t_lo, double t_hi,
                                  int nsamples);

// ----------------------------------------------------------------- pairings

// Lorentzian L^2 pairing of two spacetime forms of equal degree:
//   (F, G) = int [ <F_s, G_s> - <F_t, G_t> ] dt  (lumped spatial metrics).
// At least one argument must have compactly supported time profiles.
double lorentz_pairing(const GaugeTheory& th, const SpacetimeForm& f,
                       const SpacetimeForm& g);

// (alpha, A): pairing of a compact separable test form with a potential,
// shifts folded in through (alpha, d chi) = (delta alpha, chi).
double pairing_solution(const GaugeTheory& th, const SpacetimeForm& alpha,
                        const GaugePotential& a);

// Propagator-smeared pairing (alpha, G~ beta) with G~ = causal propagator.
double pairing_gtilde(const GaugeTheory& th, const SpacetimeForm& alpha,
                      const SpacetimeForm& beta);

// Presymplectic product evaluated through a temporal split window:
//   sigma(A1, A2) = (delta d (eta A1), A2)
// for on-shell arguments; exact trigonometric time integrals throughout.
double sigma(const GaugeTheory& th, const GaugePotential& a1,
             const GaugePotential& a2, const TemporalWindow& w);

}  // namespace cauchyform

#endif
