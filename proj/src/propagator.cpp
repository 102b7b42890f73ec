#include "cauchyform/propagator.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace cauchyform {

ModeBasis eigendecompose(const ConstrainedBlock& blk) {
  Index n = blk.P.rows();
  CF_REQUIRE(n > 0, "precondition: empty degree block has no spectrum");
  Vec dinv_sqrt = blk.Mlump.cwiseSqrt().cwiseInverse();
  Mat B = dinv_sqrt.asDiagonal() * Mat(blk.A) * dinv_sqrt.asDiagonal();
  B = 0.5 * (B + B.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Mat> es(B);
  CF_REQUIRE(es.info() == Eigen::Success, "invariant-violation: eigendecomposition failed");

  ModeBasis b;
  b.degree = blk.degree;
  b.eigenvalues = es.eigenvalues();
  b.modes = dinv_sqrt.asDiagonal() * es.eigenvectors();
  b.mlump = blk.Mlump;
  b.P = blk.P;
  b.op_norm = std::max(std::abs(b.eigenvalues[0]), std::abs(b.eigenvalues[n - 1]));
  b.clip = 1e-9 * b.op_norm;
  CF_REQUIRE(b.eigenvalues[0] >= -b.clip - 1e-300,
             "invariant-violation: constrained operator has a genuinely negative eigenvalue ",
             b.eigenvalues[0]);
  for (Index j = 0; j < n; ++j) b.n_zero += b.is_zero_mode(j) ? 1 : 0;
  return b;
}

namespace {
double phi(double lambda, bool zero_mode, double dt) {
  if (zero_mode) return dt;
  double w = std::sqrt(lambda);
  return std::sin(w * dt) / w;
}
}  // namespace

Mat green_kernel(const ModeBasis& b, double dt) {
  Vec f(b.eigenvalues.size());
  for (Index j = 0; j < f.size(); ++j) f[j] = phi(b.eigenvalues[j], b.is_zero_mode(j), dt);
  return b.modes * f.asDiagonal() * b.modes.transpose() * b.mlump.asDiagonal();
}

Mat apply_green(const ModeBasis& b, const Vec& times, const Mat& source, GreenKind kind) {
  Index nt = times.size();
  CF_REQUIRE(nt >= 2, "precondition: sampled application needs at least two time samples");
  for (Index i = 1; i < nt; ++i)
    CF_REQUIRE(times[i] > times[i - 1], "precondition: time samples must be increasing");
  CF_REQUIRE(source.rows() == b.modes.rows() && source.cols() == nt,
             "precondition: source must be kept-dofs x n_times");

  Mat g = b.modes.transpose() * (b.mlump.asDiagonal() * source);  // modes × nt
  Index nm = g.rows();
  Mat u = Mat::Zero(nm, nt);

  for (Index j = 0; j < nm; ++j) {
    bool zm = b.is_zero_mode(j);
    double w = zm ? 0.0 : std::sqrt(b.eigenvalues[j]);
    // cumulative trapezoids of the two kernel components
    Vec c0 = Vec::Zero(nt), c1 = Vec::Zero(nt);
    auto comp = [&](double s, int which) {
      if (zm) return which == 0 ? 1.0 : s;          // φ(t−s) = t·1 − s
      return which == 0 ? std::cos(w * s) : std::sin(w * s);  // sin(w(t−s)) expansion
    };
    for (Index i = 1; i < nt; ++i) {
      double h = times[i] - times[i - 1];
      c0[i] = c0[i - 1] + 0.5 * h * (comp(times[i - 1], 0) * g(j, i - 1) + comp(times[i], 0) * g(j, i));
      c1[i] = c1[i - 1] + 0.5 * h * (comp(times[i - 1], 1) * g(j, i - 1) + comp(times[i], 1) * g(j, i));
    }
    double c0_tot = c0[nt - 1], c1_tot = c1[nt - 1];
    for (Index i = 0; i < nt; ++i) {
      double a0, a1;  // u = a0·C + a1·S with the retarded/advanced/causal windows
      if (zm) {
        a0 = times[i];
        a1 = -1.0;
      } else {
        a0 = std::sin(w * times[i]) / w;
        a1 = -std::cos(w * times[i]) / w;
      }
      switch (kind) {
        case GreenKind::Retarded: u(j, i) = a0 * c0[i] + a1 * c1[i]; break;
        case GreenKind::Advanced:
          u(j, i) = -(a0 * (c0_tot - c0[i]) + a1 * (c1_tot - c1[i]));
          break;
        case GreenKind::Causal: u(j, i) = a0 * c0_tot + a1 * c1_tot; break;
      }
    }
  }
  return b.modes * u;
}

Vec ExactModeField::eval(double t) const {
  CF_REQUIRE(basis != nullptr, "precondition: field has no basis");
  Vec c(static_cast<Index>(coeff.size()));
  for (Index j = 0; j < c.size(); ++j) c[j] = coeff[static_cast<size_t>(j)].eval(t);
  return basis->modes * c;
}

ExactModeField ExactModeField::time_derivative() const {
  ExactModeField d;
  d.basis = basis;
  d.coeff.reserve(coeff.size());
  for (const auto& c : coeff) d.coeff.push_back(c.derivative());
  return d;
}

ExactModeField exact_green(const ModeBasis& b,
                           const std::vector<std::pair<Vec, timecalc::PiecewiseTrig>>& sources,
                           GreenKind kind) {
  ExactModeField f;
  f.basis = &b;
  Index nm = b.eigenvalues.size();
  f.coeff.assign(static_cast<size_t>(nm), timecalc::PiecewiseTrig::zero());
  for (const auto& [spatial, profile] : sources) {
    CF_REQUIRE(spatial.size() == b.modes.rows(), "precondition: source dof length mismatch");
    Vec w = b.modes.transpose() * (b.mlump.asDiagonal() * spatial);
    for (Index j = 0; j < nm; ++j) {
      if (w[j] == 0.0) continue;
      double lam = b.is_zero_mode(j) ? 0.0 : b.eigenvalues[j];
      timecalc::PiecewiseTrig r;
      switch (kind) {
        case GreenKind::Retarded: r = timecalc::mode_response_retarded(lam, profile); break;
        case GreenKind::Advanced: r = timecalc::mode_response_advanced(lam, profile); break;
        case GreenKind::Causal: r = timecalc::mode_response_causal(lam, profile); break;
      }
      f.coeff[static_cast<size_t>(j)] =
          timecalc::add(f.coeff[static_cast<size_t>(j)], timecalc::scale(w[j], r));
    }
  }
  return f;
}

ExactModeField exact_separable(const ModeBasis& b, const Vec& spatial,
                               const timecalc::PiecewiseTrig& profile) {
  CF_REQUIRE(spatial.size() == b.modes.rows(), "precondition: field dof length mismatch");
  ExactModeField f;
  f.basis = &b;
  Vec w = b.modes.transpose() * (b.mlump.asDiagonal() * spatial);
  f.coeff.reserve(static_cast<size_t>(w.size()));
  for (Index j = 0; j < w.size(); ++j) f.coeff.push_back(timecalc::scale(w[j], profile));
  return f;
}

ExactModeField add(const ExactModeField& u, const ExactModeField& v) {
  CF_REQUIRE(u.basis == v.basis && u.coeff.size() == v.coeff.size(),
             "precondition: field addition needs a shared mode basis");
  ExactModeField r;
  r.basis = u.basis;
  r.coeff.reserve(u.coeff.size());
  for (size_t j = 0; j < u.coeff.size(); ++j)
    r.coeff.push_back(timecalc::add(u.coeff[j], v.coeff[j]));
  return r;
}

ExactModeField scale(double s, const ExactModeField& u) {
  ExactModeField r;
  r.basis = u.basis;
  r.coeff.reserve(u.coeff.size());
  for (const auto& c : u.coeff) r.coeff.push_back(timecalc::scale(s, c));
  return r;
}

double exact_pairing(const ExactModeField& u, const ExactModeField& v) {
  CF_REQUIRE(u.basis == v.basis, "precondition: pairing needs a shared mode basis");
  double acc = 0;
  for (size_t j = 0; j < u.coeff.size(); ++j)
    acc += timecalc::inner_all_time(u.coeff[j], v.coeff[j]);
  return acc;
}

double exact_pairing_cross(const ExactModeField& u, const ExactModeField& v, const Mat& d_modes) {
  CF_REQUIRE(d_modes.rows() == static_cast<Index>(u.coeff.size()) &&
                 d_modes.cols() == static_cast<Index>(v.coeff.size()),
             "precondition: cross-pairing matrix shape mismatch");
  double scale_d = d_modes.cwiseAbs().maxCoeff();
  double acc = 0;
  for (Index j = 0; j < d_modes.rows(); ++j)
    for (Index l = 0; l < d_modes.cols(); ++l) {
      if (std::abs(d_modes(j, l)) <= 1e-15 * scale_d) continue;
      acc += d_modes(j, l) * timecalc::inner_all_time(u.coeff[static_cast<size_t>(j)],
                                                      v.coeff[static_cast<size_t>(l)]);
    }
  return acc;
}

}  // namespace cauchyform
