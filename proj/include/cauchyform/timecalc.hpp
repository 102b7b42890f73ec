#ifndef CAUCHYFORM_TIMECALC_HPP
#define CAUCHYFORM_TIMECALC_HPP

#include <cstdint>
#include <vector>

#include "cauchyform/common.hpp"

// Closed-form temporal calculus: piecewise functions whose pieces are
// polynomial-times-trigonometric sums. Sources, window profiles, and the
// per-mode responses of u'' + λu = g all live in this class, so time
// integrals and pairings evaluate in closed form instead of by quadrature.
//
// Numerical policy: polynomials are stored against the center of their piece
// (small local arguments), trig arguments are global (exact product-to-sum),
// and any trig factor whose phase advance over a piece is small is replaced
// by its machine-precision Taylor polynomial before integration by parts.

namespace cauchyform::timecalc {

struct Poly {
  std::vector<double> c;  // value = Σ c[m] u^m; empty means zero

  static Poly zero() { return {}; }
  static Poly constant(double v);
  double eval(double u) const;
  Poly derivative() const;
  Poly antiderivative() const;
  Poly shifted(double d) const;  // q(u) = p(u + d)
  int degree() const { return static_cast<int>(c.size()) - 1; }
  void trim();
};

Poly operator+(const Poly& a, const Poly& b);
Poly operator*(const Poly& a, const Poly& b);
Poly operator*(double s, const Poly& a);

enum class Trig { Cos = 0, Sin = 1 };

// p(t - center) * trig(omega * t); omega == 0 means a pure polynomial (Cos kind).
struct Term {
  Poly p;
  double omega = 0;
  Trig kind = Trig::Cos;
};

struct TrigPoly {
  std::vector<Term> terms;

  static TrigPoly zero() { return {}; }
  static TrigPoly from_poly(Poly p);
  bool is_zero() const { return terms.empty(); }
  double eval(double u, double center) const;
  TrigPoly derivative() const;
  TrigPoly rebased(double from_center, double to_center) const;
  void merge();  // combine equal-frequency terms, drop zeros
};

TrigPoly operator+(const TrigPoly& a, const TrigPoly& b);
TrigPoly operator*(double s, const TrigPoly& a);
// product with exact trig product-to-sum; both factors share one center
TrigPoly product(const TrigPoly& a, const TrigPoly& b);

// exact ∫ f du over [u1, u2] for f with the given center (trig args are ω(u+center))
double integrate_trigpoly(const TrigPoly& f, double center, double u1, double u2);

// F with F' = f, same center; requires every nonzero frequency to satisfy
// |ω|·halfwidth > 2 (smaller ones are Taylor-converted first)
TrigPoly antiderivative_trigpoly(const TrigPoly& f, double center, double halfwidth);

class PiecewiseTrig {
 public:
  // single unbounded region (constant and similar): one break at 0 by convention
  static PiecewiseTrig constant(double v);
  static PiecewiseTrig zero() { return constant(0.0); }
  // tails and pieces given explicitly; breaks strictly increasing
  PiecewiseTrig() = default;
  PiecewiseTrig(std::vector<double> breaks, std::vector<TrigPoly> pieces, TrigPoly left,
                TrigPoly right);

  const std::vector<double>& breaks() const { return br_; }
  double eval(double t) const;
  PiecewiseTrig derivative() const;
  bool compact_support() const;  // both tails identically zero
  double sup_norm_estimate() const;

  double integrate(double a, double b) const;
  double integrate_all() const;  // requires compact support

  friend PiecewiseTrig add(const PiecewiseTrig& a, const PiecewiseTrig& b);
  friend PiecewiseTrig multiply(const PiecewiseTrig& a, const PiecewiseTrig& b);
  friend PiecewiseTrig scale(double s, const PiecewiseTrig& a);

  // cumulative integral from -∞ (left tail must vanish); right tail is constant
  // when the integrand's right tail vanishes
  friend PiecewiseTrig cumulative(const PiecewiseTrig& g);

  double center(std::ptrdiff_t region) const;  // region: -1 left tail, 0..m-1 pieces, m right tail
  const TrigPoly& region_fn(std::ptrdiff_t region) const;
  std::ptrdiff_t region_count() const { return static_cast<std::ptrdiff_t>(piece_.size()); }

 private:
  std::vector<double> br_{0.0};
  std::vector<TrigPoly> piece_;  // piece i on [br_[i], br_[i+1]]
  TrigPoly left_, right_;
};

PiecewiseTrig add(const PiecewiseTrig& a, const PiecewiseTrig& b);
PiecewiseTrig multiply(const PiecewiseTrig& a, const PiecewiseTrig& b);
PiecewiseTrig scale(double s, const PiecewiseTrig& a);
PiecewiseTrig cumulative(const PiecewiseTrig& g);

// ⟨f, g⟩ = ∫ f g dt over all time (product must be compactly supported)
double inner_all_time(const PiecewiseTrig& f, const PiecewiseTrig& g);

// profile builders -----------------------------------------------------------

// sin^{2m}(π (t-t0)/(t1-t0)) on [t0, t1], zero outside; C^{2m-1}, unit peak
PiecewiseTrig sin_power_bump(double t0, double t1, int m);
// C² monotone ramp 0 → 1 over [t0, t1]: u/T - sin(2πu/T)/(2π)
PiecewiseTrig smoothstep(double t0, double t1);
// global sinusoid cos(ω t + phase) (no compact support)
PiecewiseTrig sinusoid(double omega, double phase);
// the global coordinate function t (for zero-mode responses)
PiecewiseTrig coordinate();

// mode responses --------------------------------------------------------------

// closed-form solutions of u'' + λ u = g for compactly supported g (λ ≥ 0;
// λ = 0 is the clipped zero-mode kernel φ(t) = t)
PiecewiseTrig mode_response_retarded(double lambda, const PiecewiseTrig& g);
PiecewiseTrig mode_response_advanced(double lambda, const PiecewiseTrig& g);
PiecewiseTrig mode_response_causal(double lambda, const PiecewiseTrig& g);

// pick a duration near t_target for which all bump harmonics 2πk/T (k ≤ mharm)
// stay separated from every frequency in `freqs` by at least `gap`
double pick_clear_duration(const Vec& freqs, double t_target, int mharm, double gap);

}  // namespace cauchyform::timecalc

#endif
