#include "cauchyform/timecalc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cauchyform::timecalc {

namespace {
constexpr double kFreqMergeTol = 1e-13;
constexpr double kSeriesLimit = 8.0;    // |ω u| range handled by the Taylor path
constexpr double kConvertLimit = 2.0;   // |ω|·halfwidth below which trig → poly
}  // namespace

// ---------------------------------------------------------------- Poly

Poly Poly::constant(double v) {
  Poly p;
  if (v != 0.0) p.c = {v};
  return p;
}

double Poly::eval(double u) const {
  double acc = 0;
  for (size_t m = c.size(); m-- > 0;) acc = acc * u + c[m];
  return acc;
}

Poly Poly::derivative() const {
  Poly d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (size_t m = 1; m < c.size(); ++m) d.c[m - 1] = static_cast<double>(m) * c[m];
  d.trim();
  return d;
}

Poly Poly::antiderivative() const {
  Poly a;
  if (c.empty()) return a;
  a.c.assign(c.size() + 1, 0.0);
  for (size_t m = 0; m < c.size(); ++m) a.c[m + 1] = c[m] / static_cast<double>(m + 1);
  return a;
}

Poly Poly::shifted(double d) const {
  // Horner in (u + d)
  Poly r;
  for (size_t m = c.size(); m-- > 0;) {
    // r = r * (u + d) + c[m]
    Poly nr;
    nr.c.assign(r.c.size() + 1, 0.0);
    for (size_t i = 0; i < r.c.size(); ++i) {
      nr.c[i + 1] += r.c[i];
      nr.c[i] += r.c[i] * d;
    }
    if (nr.c.empty()) nr.c.assign(1, 0.0);
    nr.c[0] += c[m];
    nr.trim();
    r = nr;
  }
  return r;
}

void Poly::trim() {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly r;
  r.c.assign(std::max(a.c.size(), b.c.size()), 0.0);
  for (size_t m = 0; m < a.c.size(); ++m) r.c[m] += a.c[m];
  for (size_t m = 0; m < b.c.size(); ++m) r.c[m] += b.c[m];
  r.trim();
  return r;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  r.trim();
  return r;
}

Poly operator*(double s, const Poly& a) {
  Poly r = a;
  for (double& v : r.c) v *= s;
  r.trim();
  return r;
}

// ---------------------------------------------------------------- TrigPoly

namespace {

Term normalized(Term t) {
  if (t.omega < 0) {
    t.omega = -t.omega;
    if (t.kind == Trig::Sin) t.p = -1.0 * t.p;
  }
  if (t.omega == 0.0 && t.kind == Trig::Sin) t.p = Poly::zero();
  t.p.trim();
  return t;
}

void push_term(std::vector<Term>& out, Term t) {
  t = normalized(std::move(t));
  if (!t.p.c.empty()) out.push_back(std::move(t));
}

double trig_eval(double arg, Trig k) { return k == Trig::Cos ? std::cos(arg) : std::sin(arg); }

}  // namespace

TrigPoly TrigPoly::from_poly(Poly p) {
  TrigPoly f;
  push_term(f.terms, Term{std::move(p), 0.0, Trig::Cos});
  return f;
}

double TrigPoly::eval(double u, double center) const {
  double acc = 0;
  for (const Term& t : terms)
    acc += t.p.eval(u) * (t.omega == 0.0 ? 1.0 : trig_eval(t.omega * (u + center), t.kind));
  return acc;
}

TrigPoly TrigPoly::derivative() const {
  TrigPoly d;
  for (const Term& t : terms) {
    push_term(d.terms, Term{t.p.derivative(), t.omega, t.kind});
    if (t.omega != 0.0) {
      // d/du trig(ω(u+c)) = ±ω · other kind
      double s = (t.kind == Trig::Cos) ? -t.omega : t.omega;
      push_term(d.terms, Term{s * t.p, t.omega, t.kind == Trig::Cos ? Trig::Sin : Trig::Cos});
    }
  }
  d.merge();
  return d;
}

TrigPoly TrigPoly::rebased(double from_center, double to_center) const {
  double shift = to_center - from_center;
  if (shift == 0.0) return *this;
  TrigPoly r;
  for (const Term& t : terms) push_term(r.terms, Term{t.p.shifted(shift), t.omega, t.kind});
  r.merge();
  return r;
}

void TrigPoly::merge() {
  for (Term& t : terms) t = normalized(std::move(t));
  std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    if (a.omega != b.omega) return a.omega < b.omega;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  std::vector<Term> out;
  for (Term& t : terms) {
    if (t.p.c.empty()) continue;
    if (!out.empty() && out.back().kind == t.kind &&
        std::abs(out.back().omega - t.omega) <= kFreqMergeTol * std::max(1.0, t.omega)) {
      out.back().p = out.back().p + t.p;
    } else {
      out.push_back(std::move(t));
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    it->p.trim();
    it = it->p.c.empty() ? out.erase(it) : it + 1;
  }
  terms = std::move(out);
}

TrigPoly operator+(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  r.merge();
  return r;
}

TrigPoly operator*(double s, const TrigPoly& a) {
  TrigPoly r;
  for (const Term& t : a.terms) push_term(r.terms, Term{s * t.p, t.omega, t.kind});
  r.merge();
  return r;
}

TrigPoly product(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly r;
  for (const Term& x : a.terms)
    for (const Term& y : b.terms) {
      Poly p = 0.5 * (x.p * y.p);
      double wd = x.omega - y.omega, ws = x.omega + y.omega;
      if (x.kind == Trig::Cos && y.kind == Trig::Cos) {
        push_term(r.terms, Term{p, wd, Trig::Cos});
        push_term(r.terms, Term{p, ws, Trig::Cos});
      } else if (x.kind == Trig::Sin && y.kind == Trig::Sin) {
        push_term(r.terms, Term{p, wd, Trig::Cos});
        push_term(r.terms, Term{-1.0 * p, ws, Trig::Cos});
      } else if (x.kind == Trig::Sin && y.kind == Trig::Cos) {
        push_term(r.terms, Term{p, ws, Trig::Sin});
        push_term(r.terms, Term{p, wd, Trig::Sin});
      } else {
        push_term(r.terms, Term{p, ws, Trig::Sin});
        push_term(r.terms, Term{-1.0 * p, wd, Trig::Sin});
      }
    }
  r.merge();
  return r;
}

// ------------------------------------------------------- term integration

namespace {

// ∫ u^j p(u) du over [u1, u2]
double poly_moment(const Poly& p, int j, double u1, double u2) {
  double acc = 0;
  for (size_t m = 0; m < p.c.size(); ++m) {
    int e = static_cast<int>(m) + j + 1;
    acc += p.c[m] * (std::pow(u2, e) - std::pow(u1, e)) / static_cast<double>(e);
  }
  return acc;
}

// Taylor-path ∫ p(u) cos(ωu) du and ∫ p(u) sin(ωu) du over [u1, u2]
void series_trig_moments(const Poly& p, double omega, double u1, double u2, double& ic,
                         double& is) {
  ic = 0;
  is = 0;
  double umax = std::max(std::abs(u1), std::abs(u2));
  double x = std::abs(omega) * umax;
  CF_REQUIRE(x <= kSeriesLimit + 1.0, "invariant-violation: Taylor range exceeded in time calculus");
  double cpow = 1.0;  // ω^{2m} / (2m)!
  for (int m = 0; m <= 40; ++m) {
    double sgn = (m % 2 == 0) ? 1.0 : -1.0;
    ic += sgn * cpow * poly_moment(p, 2 * m, u1, u2);
    double spow = cpow * omega / static_cast<double>(2 * m + 1);  // ω^{2m+1} / (2m+1)!
    is += sgn * spow * poly_moment(p, 2 * m + 1, u1, u2);
    double mag = cpow * std::pow(umax, 2 * m);
    if (mag < 1e-22 && m > 2) break;
    cpow *= omega * omega / static_cast<double>((2 * m + 1) * (2 * m + 2));
  }
}

// analytic antiderivative of p(u)·trig(ω(u+center)) as a TrigPoly (in u, same center)
TrigPoly ibp_antiderivative(Poly p, double omega, Trig kind) {
  TrigPoly acc;
  double sign = 1.0;
  Trig k = kind;
  Poly cur = std::move(p);
  int guard = 0;
  while (!cur.c.empty()) {
    CF_REQUIRE(++guard < 64, "invariant-violation: antiderivative recursion runaway");
    if (k == Trig::Cos) {
      // ∫ q cos = (q/ω) sin − (1/ω) ∫ q' sin
      push_term(acc.terms, Term{(sign / omega) * cur, omega, Trig::Sin});
      cur = cur.derivative();
      sign = -sign / omega;
      k = Trig::Sin;
    } else {
      // ∫ q sin = −(q/ω) cos + (1/ω) ∫ q' cos
      push_term(acc.terms, Term{(-sign / omega) * cur, omega, Trig::Cos});
      cur = cur.derivative();
      sign = sign / omega;
      k = Trig::Cos;
    }
  }
  acc.merge();
  return acc;
}

// replace p(u)·trig(ω(u+center)) by a machine-precision polynomial on |u| ≤ halfwidth
Poly taylor_convert(const Poly& p, double omega, Trig kind, double center, double halfwidth) {
  double psi = omega * center;
  double cp = std::cos(psi), sp = std::sin(psi);
  // trig(ωu + ψ): cos → cp·cos(ωu) − sp·sin(ωu); sin → sp·cos(ωu) + cp·sin(ωu)
  double a = (kind == Trig::Cos) ? cp : sp;
  double b = (kind == Trig::Cos) ? -sp : cp;
  Poly cser, sser;
  double x = std::abs(omega) * halfwidth;
  CF_REQUIRE(x <= kConvertLimit + 1.0, "invariant-violation: Taylor conversion out of range");
  double coef = 1.0;
  for (int m = 0; m <= 24; ++m) {
    double sgn = (m % 2 == 0) ? 1.0 : -1.0;
    // cos term u^{2m}, sin term u^{2m+1}
    if (cser.c.size() < static_cast<size_t>(2 * m + 1)) cser.c.resize(2 * m + 1, 0.0);
    cser.c[static_cast<size_t>(2 * m)] = sgn * coef;
    double scoef = coef * omega / static_cast<double>(2 * m + 1);
    if (sser.c.size() < static_cast<size_t>(2 * m + 2)) sser.c.resize(2 * m + 2, 0.0);
    sser.c[static_cast<size_t>(2 * m + 1)] = sgn * scoef;
    double mag = coef * std::pow(halfwidth, 2 * m);
    if (mag < 1e-22 && m > 2) break;
    coef *= omega * omega / static_cast<double>((2 * m + 1) * (2 * m + 2));
  }
  cser.trim();
  sser.trim();
  return p * (a * cser + b * sser);
}

double integrate_term(const Term& t, double center, double u1, double u2) {
  if (t.p.c.empty() || u1 == u2) return 0.0;
  if (t.omega == 0.0) return poly_moment(t.p, 0, u1, u2);
  double umax = std::max(std::abs(u1), std::abs(u2));
  if (std::abs(t.omega) * umax <= kSeriesLimit) {
    double ic, is;
    series_trig_moments(t.p, t.omega, u1, u2, ic, is);
    double psi = t.omega * center;
    double cp = std::cos(psi), sp = std::sin(psi);
    return (t.kind == Trig::Cos) ? cp * ic - sp * is : sp * ic + cp * is;
  }
  if (t.p.degree() <= 12) {
    TrigPoly F = ibp_antiderivative(t.p, t.omega, t.kind);
    return F.eval(u2, center) - F.eval(u1, center);
  }
  // High-degree polynomial (a Taylor-converted factor) against a genuinely
  // oscillatory trig factor: integration by parts would amplify roundoff, so
  // bisect and re-expand about each half's midpoint until the Taylor window
  // of the series path applies.  Each recursion halves |omega|*halfwidth.
  double um = 0.5 * (u1 + u2);
  auto half = [&](double a, double b) {
    double c1 = 0.5 * (a + b);
    Term s{t.p.shifted(c1), t.omega, t.kind};
    return integrate_term(s, center + c1, a - c1, b - c1);
  };
  return half(u1, um) + half(um, u2);
}

}  // namespace

double integrate_trigpoly(const TrigPoly& f, double center, double u1, double u2) {
  double acc = 0;
  for (const Term& t : f.terms) acc += integrate_term(t, center, u1, u2);
  return acc;
}

TrigPoly antiderivative_trigpoly(const TrigPoly& f, double center, double halfwidth) {
  TrigPoly acc;
  for (const Term& t : f.terms) {
    if (t.omega == 0.0) {
      push_term(acc.terms, Term{t.p.antiderivative(), 0.0, Trig::Cos});
    } else if (std::abs(t.omega) * halfwidth <= kConvertLimit) {
      Poly conv = taylor_convert(t.p, t.omega, t.kind, center, halfwidth);
      push_term(acc.terms, Term{conv.antiderivative(), 0.0, Trig::Cos});
    } else {
      TrigPoly part = ibp_antiderivative(t.p, t.omega, t.kind);
      acc.terms.insert(acc.terms.end(), part.terms.begin(), part.terms.end());
    }
  }
  acc.merge();
  return acc;
}

// ---------------------------------------------------------------- PiecewiseTrig

PiecewiseTrig::PiecewiseTrig(std::vector<double> breaks, std::vector<TrigPoly> pieces,
                             TrigPoly left, TrigPoly right)
    : br_(std::move(breaks)), piece_(std::move(pieces)), left_(std::move(left)),
      right_(std::move(right)) {
  CF_REQUIRE(!br_.empty(), "precondition: piecewise function needs at least one breakpoint");
  CF_REQUIRE(piece_.size() + 1 == br_.size(), "precondition: piece/breakpoint count mismatch");
  for (size_t i = 1; i < br_.size(); ++i)
    CF_REQUIRE(br_[i] > br_[i - 1], "precondition: breakpoints must be strictly increasing");
}

PiecewiseTrig PiecewiseTrig::constant(double v) {
  PiecewiseTrig f;
  f.left_ = TrigPoly::from_poly(Poly::constant(v));
  f.right_ = f.left_;
  return f;
}

double PiecewiseTrig::center(std::ptrdiff_t region) const {
  if (region < 0) return br_.front();
  if (region >= static_cast<std::ptrdiff_t>(piece_.size())) return br_.back();
  return 0.5 * (br_[static_cast<size_t>(region)] + br_[static_cast<size_t>(region) + 1]);
}

const TrigPoly& PiecewiseTrig::region_fn(std::ptrdiff_t region) const {
  if (region < 0) return left_;
  if (region >= static_cast<std::ptrdiff_t>(piece_.size())) return right_;
  return piece_[static_cast<size_t>(region)];
}

namespace {
std::ptrdiff_t region_of(const std::vector<double>& br, size_t pieces, double t) {
  if (t < br.front()) return -1;
  auto it = std::upper_bound(br.begin(), br.end(), t);
  std::ptrdiff_t r = (it - br.begin()) - 1;
  return std::min<std::ptrdiff_t>(r, static_cast<std::ptrdiff_t>(pieces));
}
}  // namespace

double PiecewiseTrig::eval(double t) const {
  std::ptrdiff_t r = region_of(br_, piece_.size(), t);
  return region_fn(r).eval(t - center(r), center(r));
}

PiecewiseTrig PiecewiseTrig::derivative() const {
  PiecewiseTrig d = *this;
  d.left_ = left_.derivative();
  d.right_ = right_.derivative();
  for (auto& p : d.piece_) p = p.derivative();
  return d;
}

bool PiecewiseTrig::compact_support() const { return left_.is_zero() && right_.is_zero(); }

double PiecewiseTrig::sup_norm_estimate() const {
  double span = std::max(br_.back() - br_.front(), 1.0);
  double lo = br_.front() - 0.2 * span, hi = br_.back() + 0.2 * span;
  double best = 0;
  for (int i = 0; i <= 256; ++i)
    best = std::max(best, std::abs(eval(lo + (hi - lo) * i / 256.0)));
  return best;
}

double PiecewiseTrig::integrate(double a, double b) const {
  CF_REQUIRE(b >= a, "precondition: integration bounds out of order");
  double acc = 0;
  std::ptrdiff_t r0 = region_of(br_, piece_.size(), a);
  std::ptrdiff_t r1 = region_of(br_, piece_.size(), b);
  for (std::ptrdiff_t r = r0; r <= r1; ++r) {
    double lo = (r < 0) ? a : std::max(a, br_[static_cast<size_t>(r)]);
    double hi = (r >= static_cast<std::ptrdiff_t>(piece_.size()))
                    ? b
                    : std::min(b, br_[static_cast<size_t>(r + 1)]);
    if (hi <= lo) continue;
    double c = center(r);
    acc += integrate_trigpoly(region_fn(r), c, lo - c, hi - c);
  }
  return acc;
}

double PiecewiseTrig::integrate_all() const {
  CF_REQUIRE(compact_support(), "precondition: whole-line integral needs compact support");
  if (br_.size() < 2) return 0.0;
  return integrate(br_.front(), br_.back());
}

namespace {
std::vector<double> merged_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> m;
  m.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
  m.erase(std::unique(m.begin(), m.end(),
                      [](double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + std::abs(x)); }),
          m.end());
  return m;
}
}  // namespace

PiecewiseTrig add(const PiecewiseTrig& a, const PiecewiseTrig& b) {
  std::vector<double> br = merged_breaks(a.br_, b.br_);
  std::vector<TrigPoly> pieces;
  auto section = [&](const PiecewiseTrig& f, double tmid, double cnew) {
    std::ptrdiff_t r = region_of(f.br_, f.piece_.size(), tmid);
    return f.region_fn(r).rebased(f.center(r), cnew);
  };
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    double mid = 0.5 * (br[i] + br[i + 1]);
    pieces.push_back(section(a, mid, mid) + section(b, mid, mid));
  }
  TrigPoly left = section(a, br.front() - 1.0, br.front()) + section(b, br.front() - 1.0, br.front());
  TrigPoly right = section(a, br.back() + 1.0, br.back()) + section(b, br.back() + 1.0, br.back());
  return PiecewiseTrig(std::move(br), std::move(pieces), std::move(left), std::move(right));
}

PiecewiseTrig multiply(const PiecewiseTrig& a, const PiecewiseTrig& b) {
  std::vector<double> br = merged_breaks(a.br_, b.br_);
  std::vector<TrigPoly> pieces;
  auto section = [&](const PiecewiseTrig& f, double tmid, double cnew) {
    std::ptrdiff_t r = region_of(f.br_, f.piece_.size(), tmid);
    return f.region_fn(r).rebased(f.center(r), cnew);
  };
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    double mid = 0.5 * (br[i] + br[i + 1]);
    pieces.push_back(product(section(a, mid, mid), section(b, mid, mid)));
  }
  TrigPoly left =
      product(section(a, br.front() - 1.0, br.front()), section(b, br.front() - 1.0, br.front()));
  TrigPoly right =
      product(section(a, br.back() + 1.0, br.back()), section(b, br.back() + 1.0, br.back()));
  return PiecewiseTrig(std::move(br), std::move(pieces), std::move(left), std::move(right));
}

PiecewiseTrig scale(double s, const PiecewiseTrig& a) {
  PiecewiseTrig r = a;
  r.left_ = s * r.left_;
  r.right_ = s * r.right_;
  for (auto& p : r.piece_) p = s * p;
  return r;
}

PiecewiseTrig cumulative(const PiecewiseTrig& g) {
  CF_REQUIRE(g.compact_support(), "precondition: cumulative integral needs compact support");
  std::vector<TrigPoly> pieces;
  double acc = 0;
  for (size_t i = 0; i + 1 < g.br_.size(); ++i) {
    double c = 0.5 * (g.br_[i] + g.br_[i + 1]);
    double hw = 0.5 * (g.br_[i + 1] - g.br_[i]);
    TrigPoly F = antiderivative_trigpoly(g.piece_[i], c, hw);
    double fa = F.eval(g.br_[i] - c, c);
    double fb = F.eval(g.br_[i + 1] - c, c);
    TrigPoly piece = F + TrigPoly::from_poly(Poly::constant(acc - fa));
    pieces.push_back(std::move(piece));
    acc += fb - fa;
  }
  TrigPoly right = TrigPoly::from_poly(Poly::constant(acc));
  return PiecewiseTrig(g.br_, std::move(pieces), TrigPoly::zero(), std::move(right));
}

double inner_all_time(const PiecewiseTrig& f, const PiecewiseTrig& g) {
  PiecewiseTrig m = multiply(f, g);
  return m.integrate_all();
}

// ---------------------------------------------------------------- builders

namespace {
PiecewiseTrig pure_trig(double omega, Trig kind) {
  TrigPoly f;
  f.terms.push_back(Term{Poly::constant(1.0), omega, kind});
  return PiecewiseTrig({0.0}, {}, f, f);
}

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}
}  // namespace

PiecewiseTrig sin_power_bump(double t0, double t1, int m) {
  CF_REQUIRE(t1 > t0, "precondition: bump window must have positive length");
  CF_REQUIRE(m >= 1 && m <= 16, "precondition: bump exponent out of range");
  double T = t1 - t0;
  double four_m = std::pow(4.0, m);
  TrigPoly f;
  f.terms.push_back(Term{Poly::constant(binom(2 * m, m) / four_m), 0.0, Trig::Cos});
  for (int k = 1; k <= m; ++k) {
    double w = 2.0 * std::acos(-1.0) * k / T;
    double phase = -w * t0;  // cos(w t + phase) = cos(w (t - t0))
    double amp = 2.0 / four_m * ((k % 2 == 0) ? 1.0 : -1.0) * binom(2 * m, m - k);
    f.terms.push_back(Term{Poly::constant(amp * std::cos(phase)), w, Trig::Cos});
    f.terms.push_back(Term{Poly::constant(-amp * std::sin(phase)), w, Trig::Sin});
  }
  f.merge();
  return PiecewiseTrig({t0, t1}, {f}, TrigPoly::zero(), TrigPoly::zero());
}

PiecewiseTrig smoothstep(double t0, double t1) {
  CF_REQUIRE(t1 > t0, "precondition: ramp window must have positive length");
  double T = t1 - t0;
  double c = 0.5 * (t0 + t1);
  double w = 2.0 * std::acos(-1.0) / T;
  TrigPoly f;
  Poly lin;  // ((u + c) - t0)/T in u = t - c
  lin.c = {(c - t0) / T, 1.0 / T};
  f.terms.push_back(Term{lin, 0.0, Trig::Cos});
  double phase = -w * t0;  // −sin(w t + phase)/(2π·...) with w = 2π/T
  double s = -1.0 / (2.0 * std::acos(-1.0));
  f.terms.push_back(Term{Poly::constant(s * std::cos(phase)), w, Trig::Sin});
  f.terms.push_back(Term{Poly::constant(s * std::sin(phase)), w, Trig::Cos});
  f.merge();
  return PiecewiseTrig({t0, t1}, {f}, TrigPoly::zero(),
                       TrigPoly::from_poly(Poly::constant(1.0)));
}

PiecewiseTrig sinusoid(double omega, double phase) {
  TrigPoly f;
  f.terms.push_back(Term{Poly::constant(std::cos(phase)), omega, Trig::Cos});
  f.terms.push_back(Term{Poly::constant(-std::sin(phase)), omega, Trig::Sin});
  f.merge();
  return PiecewiseTrig({0.0}, {}, f, f);
}

PiecewiseTrig coordinate() {
  Poly lin;
  lin.c = {0.0, 1.0};
  TrigPoly f = TrigPoly::from_poly(lin);  // centers are both 0, so u = t
  return PiecewiseTrig({0.0}, {}, f, f);
}

// ------------------------------------------------------------- mode responses

namespace {
// f(-t): odd polynomial coefficients and sine terms flip sign; trig arguments
// are global, so reflected pieces land on the negated, reversed breakpoints
// with the matching centers.
TrigPoly reflected(const TrigPoly& f) {
  TrigPoly r;
  for (const Term& t : f.terms) {
    Poly q = t.p;
    for (size_t m = 1; m < q.c.size(); m += 2) q.c[m] = -q.c[m];
    if (t.kind == Trig::Sin) q = -1.0 * q;
    r.terms.push_back(Term{std::move(q), t.omega, t.kind});
  }
  r.merge();
  return r;
}

PiecewiseTrig reflected(const PiecewiseTrig& f) {
  const std::vector<double>& ob = f.breaks();
  std::vector<double> br(ob.size());
  for (size_t i = 0; i < br.size(); ++i) br[i] = -ob[ob.size() - 1 - i];
  std::vector<TrigPoly> pieces;
  pieces.reserve(static_cast<size_t>(f.region_count()));
  for (std::ptrdiff_t j = f.region_count() - 1; j >= 0; --j)
    pieces.push_back(reflected(f.region_fn(j)));
  return PiecewiseTrig(std::move(br), std::move(pieces),
                       reflected(f.region_fn(f.region_count())), reflected(f.region_fn(-1)));
}

// ∫_t^∞ g ds, with the future tail structurally zero (not a cancellation)
PiecewiseTrig cumulative_from_right(const PiecewiseTrig& g) {
  return reflected(cumulative(reflected(g)));
}

void causal_amplitudes(double lambda, const PiecewiseTrig& g, double& cinf, double& sinf,
                       double omega) {
  PiecewiseTrig C = cumulative(multiply(pure_trig(omega, Trig::Cos), g));
  PiecewiseTrig S = cumulative(multiply(pure_trig(omega, Trig::Sin), g));
  double tend = g.breaks().back() + 1.0;
  cinf = C.eval(tend);
  sinf = S.eval(tend);
  (void)lambda;
}
}  // namespace

PiecewiseTrig mode_response_retarded(double lambda, const PiecewiseTrig& g) {
  CF_REQUIRE(g.compact_support(), "precondition: mode response needs a compactly supported source");
  CF_REQUIRE(lambda >= 0.0, "precondition: mode response needs a nonnegative eigenvalue");
  if (lambda == 0.0) {
    PiecewiseTrig g0 = cumulative(g);
    PiecewiseTrig g1 = cumulative(multiply(coordinate(), g));
    return add(multiply(coordinate(), g0), scale(-1.0, g1));
  }
  double omega = std::sqrt(lambda);
  PiecewiseTrig C = cumulative(multiply(pure_trig(omega, Trig::Cos), g));
  PiecewiseTrig S = cumulative(multiply(pure_trig(omega, Trig::Sin), g));
  PiecewiseTrig u = add(multiply(pure_trig(omega, Trig::Sin), C),
                        scale(-1.0, multiply(pure_trig(omega, Trig::Cos), S)));
  return scale(1.0 / omega, u);
}

PiecewiseTrig mode_response_causal(double lambda, const PiecewiseTrig& g) {
  CF_REQUIRE(g.compact_support(), "precondition: mode response needs a compactly supported source");
  CF_REQUIRE(lambda >= 0.0, "precondition: mode response needs a nonnegative eigenvalue");
  if (lambda == 0.0) {
    double g0 = cumulative(g).eval(g.breaks().back() + 1.0);
    double g1 = cumulative(multiply(coordinate(), g)).eval(g.breaks().back() + 1.0);
    return add(scale(g0, coordinate()), PiecewiseTrig::constant(-g1));
  }
  double omega = std::sqrt(lambda), cinf = 0, sinf = 0;
  causal_amplitudes(lambda, g, cinf, sinf, omega);
  return add(scale(cinf / omega, pure_trig(omega, Trig::Sin)),
             scale(-sinf / omega, pure_trig(omega, Trig::Cos)));
}

PiecewiseTrig mode_response_advanced(double lambda, const PiecewiseTrig& g) {
  CF_REQUIRE(g.compact_support(), "precondition: mode response needs a compactly supported source");
  CF_REQUIRE(lambda >= 0.0, "precondition: mode response needs a nonnegative eigenvalue");
  // Built from right-sided cumulatives so the response is structurally zero
  // in the far future instead of a roundoff-level retarded-minus-causal tail.
  if (lambda == 0.0) {
    PiecewiseTrig g0 = cumulative_from_right(g);
    PiecewiseTrig g1 = cumulative_from_right(multiply(coordinate(), g));
    return add(scale(-1.0, multiply(coordinate(), g0)), g1);
  }
  double omega = std::sqrt(lambda);
  PiecewiseTrig C = cumulative_from_right(multiply(pure_trig(omega, Trig::Cos), g));
  PiecewiseTrig S = cumulative_from_right(multiply(pure_trig(omega, Trig::Sin), g));
  PiecewiseTrig u = add(multiply(pure_trig(omega, Trig::Cos), S),
                        scale(-1.0, multiply(pure_trig(omega, Trig::Sin), C)));
  return scale(1.0 / omega, u);
}

double pick_clear_duration(const Vec& freqs, double t_target, int mharm, double gap) {
  CF_REQUIRE(t_target > 0 && mharm >= 1, "precondition: invalid duration search");
  double two_pi = 2.0 * std::acos(-1.0);
  double best_t = t_target, best_score = -1;
  for (int step = 0; step <= 400; ++step) {
    double t = t_target * (0.8 + 0.45 * step / 400.0);
    double score = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= mharm + 2; ++k) {
      double nu = two_pi * k / t;
      for (Index j = 0; j < freqs.size(); ++j) {
        if (freqs[j] <= 1e-8) continue;
        score = std::min(score, std::abs(freqs[j] - nu));
      }
    }
    if (score > best_score) {
      best_score = score;
      best_t = t;
    }
  }
  CF_REQUIRE(best_score >= gap, "invariant-violation: no resonance-free window duration near ",
             t_target, " (best separation ", best_score, ")");
  return best_t;
}

}  // namespace cauchyform::timecalc
