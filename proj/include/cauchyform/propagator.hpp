#ifndef CAUCHYFORM_PROPAGATOR_HPP
#define CAUCHYFORM_PROPAGATOR_HPP

#include <utility>
#include <vector>

#include "cauchyform/boundary.hpp"
#include "cauchyform/timecalc.hpp"

namespace cauchyform {

// Generalized eigendecomposition A e = λ M̂ e of one constrained degree block,
// with the M̂-orthonormal mode matrix and the zero-mode clip threshold.
struct ModeBasis {
  int degree = 0;
  Vec eigenvalues;  // ascending, raw values
  Mat modes;        // kept dofs × modes, M̂-orthonormal columns
  Vec mlump;
  SpMat P;          // kept-dof selector of the originating block
  double op_norm = 0;
  double clip = 0;   // |λ| ≤ clip is treated as a zero mode
  Index n_zero = 0;

  bool is_zero_mode(Index j) const { return std::abs(eigenvalues[j]) <= clip; }
};

ModeBasis eigendecompose(const ConstrainedBlock& blk);

// K(Δτ) = Σ_j φ_j(Δτ) e_j e_jᵀ M̂ with φ_j(t) = sin(√λ_j t)/√λ_j (t on zero modes)
Mat green_kernel(const ModeBasis& b, double dt);

enum class GreenKind { Retarded, Advanced, Causal };

// Sampled Duhamel application: `times` increasing, `source` kept-dofs × n_times;
// the s-integral is the trapezoid rule on the sample grid.
Mat apply_green(const ModeBasis& b, const Vec& times, const Mat& source, GreenKind kind);

// Exact path: fields expanded in the mode basis with closed-form time coefficients.
struct ExactModeField {
  const ModeBasis* basis = nullptr;
  std::vector<timecalc::PiecewiseTrig> coeff;

  Vec eval(double t) const;
  ExactModeField time_derivative() const;
};

// Green operator applied to a sum of separable sources F_s ⊗ g_s(τ)
ExactModeField exact_green(const ModeBasis& b,
                           const std::vector<std::pair<Vec, timecalc::PiecewiseTrig>>& sources,
                           GreenKind kind);

// the separable field x ⊗ g(τ) itself, expanded in the basis
ExactModeField exact_separable(const ModeBasis& b, const Vec& spatial,
                               const timecalc::PiecewiseTrig& profile);

ExactModeField add(const ExactModeField& u, const ExactModeField& v);
ExactModeField scale(double s, const ExactModeField& u);

// ∫ ⟨u(τ), v(τ)⟩_M̂ dτ (same basis; integrand must be compactly supported)
double exact_pairing(const ExactModeField& u, const ExactModeField& v);
// ∫ u(τ)ᵀ D v(τ) dτ for a cross matrix D in mode coordinates
double exact_pairing_cross(const ExactModeField& u, const ExactModeField& v, const Mat& d_modes);

}  // namespace cauchyform

#endif
