#include "cauchyform/algebra.hpp"

#include "cauchyform/cohomology.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <iterator>
#include <limits>
#include <random>
#include <thread>
#include <vector>

namespace cauchyform {

namespace {

using timecalc::PiecewiseTrig;

constexpr double kNullTol = 1e-8;
const double kInf = std::numeric_limits<double>::infinity();

// Full-complex j-simplices none of whose vertices lie on the spatial boundary.
std::vector<Index> deep_interior(const SimplicialComplex& c, int j) {
  std::vector<Index> out;
  for (Index i = 0; i < c.count(j); ++i) {
    bool touches = false;
    for (Index v : c.simp[j][i]) touches = touches || c.is_boundary[0][v] != 0;
    if (!touches) out.push_back(i);
  }
  return out;
}

// Per kept dof of degree j: does its full-dof footprint touch the boundary?
std::vector<char> boundary_taint(const GaugeTheory& th, int j) {
  const SimplicialComplex& c = th.complex();
  const SpMat& P = th.block(j).P;
  std::vector<char> taint(static_cast<std::size_t>(P.rows()), 0);
  for (Index col = 0; col < P.outerSize(); ++col) {
    bool touches = false;
    for (Index v : c.simp[j][col]) touches = touches || c.is_boundary[0][v] != 0;
    if (!touches) continue;
    for (SpMat::InnerIterator it(P, col); it; ++it) {
      if (it.value() != 0.0) taint[static_cast<std::size_t>(it.row())] = 1;
    }
  }
  return taint;
}

std::vector<Index> interior_kept(const GaugeTheory& th, int j) {
  std::vector<char> taint = boundary_taint(th, j);
  std::vector<Index> out;
  for (std::size_t r = 0; r < taint.size(); ++r) {
    if (!taint[r]) out.push_back(static_cast<Index>(r));
  }
  return out;
}

void require_interior(const GaugeTheory& th, const SpacetimeForm& f,
                      const std::string& label) {
  auto check = [&](const BlockField& b, int deg) {
    if (b.absent()) return;
    std::vector<char> taint = boundary_taint(th, deg);
    CF_REQUIRE(!b.has_modal(), "invariant-violation: generator ", label,
               " carries modal content");
    for (const SeparableTerm& p : b.parts) {
      for (Index r = 0; r < p.spatial.size(); ++r) {
        CF_REQUIRE(p.spatial[r] == 0.0 || !taint[static_cast<std::size_t>(r)],
                   "invariant-violation: generator ", label,
                   " has support on a boundary-adjacent simplex");
      }
    }
  };
  check(f.spart, f.degree);
  if (f.degree >= 1) check(f.tpart, f.degree - 1);
}

double form_scale(const GaugeTheory& th, const SpacetimeForm& f) {
  double s = 0.0;
  if (!f.spart.absent()) {
    for (const SeparableTerm& p : f.spart.parts)
      s = std::max(s, th.block_norm(f.degree, p.spatial));
  }
  if (f.degree >= 1 && !f.tpart.absent()) {
    for (const SeparableTerm& p : f.tpart.parts)
      s = std::max(s, th.block_norm(f.degree - 1, p.spatial));
  }
  return s;
}

void rescale(SpacetimeForm& f, double s) {
  for (SeparableTerm& p : f.spart.parts) p.spatial *= s;
  for (SeparableTerm& p : f.tpart.parts) p.spatial *= s;
}

// Sampled |delta alpha| / |alpha| over the profile span; exact codifferential
// of the separable representation, evaluated at interior sample times.
double sampled_coclosed_residual(const GaugeTheory& th, const SpacetimeForm& alpha,
                                 double t0, double t1) {
  SpacetimeForm del = codifferential_separable(th, alpha);
  double num = 0.0, den = 0.0;
  const int nsamp = 9;
  for (int s = 0; s < nsamp; ++s) {
    double t = t0 + (t1 - t0) * (s + 0.5) / nsamp;
    if (!del.spart.absent())
      num = std::max(num, th.block_norm(del.degree, del.spart.eval(t)));
    if (del.degree >= 1 && !del.tpart.absent())
      num = std::max(num, th.block_norm(del.degree - 1, del.tpart.eval(t)));
    if (!alpha.spart.absent())
      den = std::max(den, th.block_norm(alpha.degree, alpha.spart.eval(t)));
    if (alpha.degree >= 1 && !alpha.tpart.absent())
      den = std::max(den, th.block_norm(alpha.degree - 1, alpha.tpart.eval(t)));
  }
  return den > 0.0 ? num / den : 0.0;
}

void finalize_generator(const GaugeTheory& th, ObservableGenerator& g,
                        double t0, double t1) {
  double s = form_scale(th, g.alpha);
  CF_REQUIRE(s > 0.0, "invariant-violation: generator ", g.label,
             " collapsed to zero");
  rescale(g.alpha, 1.0 / s);
  g.coclosed_residual = sampled_coclosed_residual(th, g.alpha, t0, t1);
  CF_REQUIRE(g.coclosed_residual <= 1e-9, "invariant-violation: generator ",
             g.label, " is not coclosed (residual ", g.coclosed_residual, ")");
  require_interior(th, g.alpha, g.label);
}

std::vector<Index> kernel_modes(const ModeBasis& mb) {
  std::vector<Index> ids;
  for (Index j = 0; j < mb.eigenvalues.size(); ++j)
    if (mb.is_zero_mode(j)) ids.push_back(j);
  return ids;
}

// Static solution carried by one kernel mode: h x 1(t); on shell because
// L h = 0 and the profile is constant.
SpacetimeForm static_kernel_solution(const GaugeTheory& th, int k, const Vec& h) {
  return separable_form(th, k, {}, {{h, PiecewiseTrig::constant(1.0)}});
}

bool natural_family(BCTag t) {
  return t == BCTag::BoxNormal || t == BCTag::MaxwellNormal ||
         t == BCTag::RobinNormal;
}

}  // namespace

std::vector<ObservableGenerator> build_generators(const GaugeTheory& th, int k,
                                                  const GeneratorBudget& budget) {
  CF_REQUIRE(budget.count >= 1, "precondition: generator budget must be at least 1");
  CF_REQUIRE(k >= 1 && th.has_degree(k),
             "precondition: generator degree must lie in 1..dim");
  CF_REQUIRE(budget.t1 > budget.t0, "precondition: generator time span is empty");
  CF_REQUIRE(budget.bump_power >= 1 && budget.bump_power <= 16,
             "precondition: bump exponent out of range");
  CF_REQUIRE(budget.support >= 1,
             "precondition: generator support size must be positive");

  const SimplicialComplex& c = th.complex();
  const int n = th.dim();
  const ModeBasis& mb = th.basis(k);
  const std::vector<Index> kern = kernel_modes(mb);
  const Index n_h = static_cast<Index>(kern.size());
  CF_REQUIRE(budget.count >= n_h, "precondition: generator budget ", budget.count,
             " cannot cover the ", n_h, " kernel classes; need at least ", n_h);

  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double span = budget.t1 - budget.t0;

  // Bulk generators are delta(beta).  Prefer beta with a spatial block only:
  // its codifferential then has no time block, so every static kernel channel
  // of the propagated field vanishes identically (d of a kernel mode is zero).
  bool spatial_data = (k + 1 <= n);
  std::vector<Index> pool = deep_interior(c, spatial_data ? k + 1 : k);
  if (spatial_data && pool.empty()) {
    spatial_data = false;
    pool = deep_interior(c, k);
  }
  CF_REQUIRE(!pool.empty(),
             "precondition: mesh has no interior simplices to carry generators");
  const int data_degree = spatial_data ? k + 1 : k;
  const SpMat& sel = th.block(data_degree).P;

  std::vector<ObservableGenerator> out;
  const Index n_bulk = budget.count - n_h;
  for (Index i = 0; i < n_bulk; ++i) {
    double len = span * (0.30 + 0.15 * u01(rng));
    double start = budget.t0 + (span - len) * u01(rng);
    PiecewiseTrig bump = timecalc::sin_power_bump(start, start + len, budget.bump_power);

    std::vector<Index> picks;
    std::sample(pool.begin(), pool.end(), std::back_inserter(picks),
                std::min<Index>(budget.support, static_cast<Index>(pool.size())),
                rng);
    Vec full = Vec::Zero(c.count(data_degree));
    for (Index p : picks) full[p] = coef(rng);
    Vec kept = sel * full;

    SpacetimeForm beta = spatial_data
                             ? separable_form(th, k + 1, {}, {{kept, bump}})
                             : separable_form(th, k + 1, {{kept, bump}}, {});
    ObservableGenerator g;
    g.label = "coexact-bump-" + std::to_string(i);
    g.alpha = codifferential_separable(th, beta);
    finalize_generator(th, g, budget.t0, budget.t1);
    out.push_back(std::move(g));
  }

  if (n_h > 0) {
    // Detector construction: restrict the kernel representative to the deep
    // interior, project onto the coclosed cochains supported there, and give
    // the result a smooth profile whose harmonics avoid every nonzero mode
    // frequency (so the detector stays silent against oscillatory content).
    std::vector<Index> skept = interior_kept(th, k);
    CF_REQUIRE(!skept.empty(), "precondition: no interior degree-", k,
               " dofs available for kernel detectors");
    Mat cdd = Mat(th.codifferential(k));
    Mat csub(cdd.rows(), static_cast<Index>(skept.size()));
    for (std::size_t m = 0; m < skept.size(); ++m)
      csub.col(static_cast<Index>(m)) = cdd.col(skept[m]);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(csub);

    std::vector<double> fr;
    for (Index j = 0; j < mb.eigenvalues.size(); ++j)
      if (!mb.is_zero_mode(j))
        fr.push_back(std::sqrt(std::max(0.0, mb.eigenvalues[j])));
    Vec freqs = Eigen::Map<Vec>(fr.data(), static_cast<Index>(fr.size()));
    double dur = timecalc::pick_clear_duration(freqs, 0.55 * span, 8, 0.0);
    double tc0 = budget.t0 + 0.02 * span;
    PiecewiseTrig cold = timecalc::sin_power_bump(tc0, tc0 + dur, 8);

    for (Index z = 0; z < n_h; ++z) {
      Vec h = mb.modes.col(kern[static_cast<std::size_t>(z)]);
      Vec seed(static_cast<Index>(skept.size()));
      for (std::size_t m = 0; m < skept.size(); ++m)
        seed[static_cast<Index>(m)] = h[skept[m]];
      Vec y = seed - cod.solve(csub * seed);
      Vec zeta = Vec::Zero(mb.modes.rows());
      for (std::size_t m = 0; m < skept.size(); ++m)
        zeta[skept[m]] = y[static_cast<Index>(m)];
      double zn = th.block_norm(k, zeta);
      CF_REQUIRE(zn > 0.0,
                 "invariant-violation: kernel detector projection vanished for class ",
                 z);
      zeta /= zn;
      double overlap = zeta.dot(th.block(k).Mlump.cwiseProduct(h));
      CF_REQUIRE(std::abs(overlap) > 1e-6,
                 "invariant-violation: kernel detector fails to pair with class ",
                 z, " (overlap ", overlap, ")");

      ObservableGenerator g;
      g.label = "kernel-detector-" + std::to_string(z);
      g.alpha = separable_form(th, k, {}, {{zeta, cold}});
      g.harmonic_detector = true;
      g.harmonic_class = z;
      finalize_generator(th, g, budget.t0, budget.t1);
      out.push_back(std::move(g));
    }
  }
  return out;
}

PairingMatrix pairing_matrix(const GaugeTheory& th,
                             const std::vector<ObservableGenerator>& gens) {
  CF_REQUIRE(!gens.empty(), "precondition: pairing matrix needs at least one generator");
  const Index n = static_cast<Index>(gens.size());
  for (const ObservableGenerator& g : gens) {
    CF_REQUIRE(g.alpha.degree == gens[0].alpha.degree,
               "precondition: pairing matrix generators must share one degree");
  }

  // Warm the lazy operator caches before the parallel fill.
  for (int j = 1; j <= th.dim(); ++j) (void)th.d_modes(j);

  std::vector<SpacetimeForm> gb;
  gb.reserve(static_cast<std::size_t>(n));
  for (const ObservableGenerator& g : gens)
    gb.push_back(green_form(th, g.alpha, GreenKind::Causal));

  Mat w(n, n);
  const Index total = n * n;
  const Index nthreads = std::clamp<Index>(
      static_cast<Index>(std::thread::hardware_concurrency()), 1, total);
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nthreads));
  std::vector<std::thread> workers;
  for (Index tix = 0; tix < nthreads; ++tix) {
    workers.emplace_back([&, tix]() {
      try {
        for (Index e = tix; e < total; e += nthreads) {
          Index i = e / n, j = e % n;
          w(i, j) = lorentz_pairing(th, gens[static_cast<std::size_t>(i)].alpha,
                                    gb[static_cast<std::size_t>(j)]);
        }
      } catch (...) {
        errs[static_cast<std::size_t>(tix)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errs)
    if (e) std::rethrow_exception(e);

  PairingMatrix pm;
  pm.w = std::move(w);
  for (const ObservableGenerator& g : gens) pm.labels.push_back(g.label);
  pm.tag = th.tag();
  double wn = pm.w.norm();
  pm.antisymmetry = wn > 0.0 ? (pm.w + pm.w.transpose()).norm() / wn : 0.0;
  return pm;
}

RadicalReport radical(const GaugeTheory& th,
                      const std::vector<ObservableGenerator>& gens,
                      const PairingMatrix& pm) {
  const Index n = static_cast<Index>(gens.size());
  CF_REQUIRE(n > 0, "precondition: radical needs at least one generator");
  CF_REQUIRE(pm.w.rows() == n && pm.w.cols() == n,
             "precondition: pairing matrix size does not match the generators");
  const int k = gens[0].alpha.degree;
  const ModeBasis& mb = th.basis(k);
  const std::vector<Index> kern = kernel_modes(mb);
  const Index n_h = static_cast<Index>(kern.size());

  RadicalReport r;
  r.harmonic_pairings.resize(n, n_h);
  for (Index z = 0; z < n_h; ++z) {
    SpacetimeForm stat = static_kernel_solution(
        th, k, mb.modes.col(kern[static_cast<std::size_t>(z)]));
    for (Index i = 0; i < n; ++i)
      r.harmonic_pairings(i, z) =
          lorentz_pairing(th, gens[static_cast<std::size_t>(i)].alpha, stat);
  }

  const double wscale = pm.w.size() > 0 ? pm.w.cwiseAbs().maxCoeff() : 0.0;
  const double hscale =
      r.harmonic_pairings.size() > 0 ? r.harmonic_pairings.cwiseAbs().maxCoeff() : 0.0;
  r.quotient_null.assign(static_cast<std::size_t>(n), 0);
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    double wrow = pm.w.row(i).cwiseAbs().maxCoeff();
    double hrow = n_h > 0 ? r.harmonic_pairings.row(i).cwiseAbs().maxCoeff() : 0.0;
    bool null = wrow <= kNullTol * wscale && hrow <= kNullTol * hscale;
    r.quotient_null[static_cast<std::size_t>(i)] = null ? 1 : 0;
    if (!null) keep.push_back(i);
  }

  const std::vector<Index> bet = natural_family(th.tag())
                                     ? betti_absolute(th.complex())
                                     : betti_relative(th.complex());
  r.matched_betti = k < static_cast<int>(bet.size()) ? bet[static_cast<std::size_t>(k)] : 0;

  const Index m = static_cast<Index>(keep.size());
  if (m == 0) {
    r.gap = kInf;
    r.note = "all generators are quotient-null";
    return r;
  }

  Mat wk(m, m), hk(m, n_h);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) wk(a, b) = pm.w(keep[a], keep[b]);
    for (Index z = 0; z < n_h; ++z) hk(a, z) = r.harmonic_pairings(keep[a], z);
  }

  Eigen::JacobiSVD<Mat> svd(wk, Eigen::ComputeFullV);
  r.singular_values = svd.singularValues();
  const double smax = r.singular_values.size() > 0 ? r.singular_values[0] : 0.0;
  Index rank = 0;
  if (smax > 0.0) {
    for (Index i = 0; i < r.singular_values.size(); ++i)
      if (r.singular_values[i] > kNullTol * smax) ++rank;
  }
  r.rank = rank;
  if (rank == m || smax <= 0.0) {
    r.gap = kInf;
    r.decided = true;
  } else {
    double below = r.singular_values[rank];
    r.gap = below > 0.0 ? r.singular_values[rank - 1] / below : kInf;
    r.decided = r.gap >= 10.0;
    if (!r.decided)
      r.note = "singular-value gap below 10 at the rank cut; rank reported, not guessed";
  }

  const Index kd = m - rank;
  if (kd > 0) {
    Mat kern_basis = svd.matrixV().rightCols(kd);
    Index central = 0;
    Mat central_dirs;
    if (n_h > 0 && hscale > 0.0) {
      Mat hkk = hk.transpose() * kern_basis;  // kernel directions seen statically
      Eigen::JacobiSVD<Mat> svd2(hkk, Eigen::ComputeFullV);
      for (Index i = 0; i < svd2.singularValues().size(); ++i)
        if (svd2.singularValues()[i] > kNullTol * hscale) ++central;
      central_dirs = kern_basis * svd2.matrixV().leftCols(central);
    }
    r.radical_dim = central;
    r.radical_basis = Mat::Zero(n, central);
    for (Index col = 0; col < central; ++col)
      for (Index a = 0; a < m; ++a)
        r.radical_basis(keep[a], col) = central_dirs(a, col);
    if (kd > central) {
      if (!r.note.empty()) r.note += "; ";
      r.note += "kernel contains combinations invisible to the finite candidate family";
    }
  } else {
    r.radical_basis = Mat::Zero(n, 0);
  }
  return r;
}

OptimalityReport optimality_check(const GaugeTheory& th,
                                  const std::vector<ObservableGenerator>& gens,
                                  const PairingMatrix& pm,
                                  const std::vector<GaugePotential>& solutions,
                                  double t_lo, double t_hi,
                                  const std::vector<std::string>& solution_labels) {
  const Index n = static_cast<Index>(gens.size());
  CF_REQUIRE(n > 0, "precondition: optimality check needs generators");
  CF_REQUIRE(pm.w.rows() == n && pm.w.cols() == n,
             "precondition: pairing matrix size does not match the generators");
  CF_REQUIRE(t_hi > t_lo, "precondition: optimality sample window is empty");
  const Index ns = static_cast<Index>(solutions.size());
  auto sol_label = [&](Index s) {
    return s < static_cast<Index>(solution_labels.size())
               ? solution_labels[static_cast<std::size_t>(s)]
               : "solution-" + std::to_string(s);
  };

  const int k = gens[0].alpha.degree;
  const ModeBasis& mb = th.basis(k);
  const std::vector<Index> kern = kernel_modes(mb);
  const Index n_h = static_cast<Index>(kern.size());

  OptimalityReport r;
  r.solution_pairings.resize(n, ns);
  for (Index s = 0; s < ns; ++s)
    for (Index i = 0; i < n; ++i)
      r.solution_pairings(i, s) =
          pairing_solution(th, gens[static_cast<std::size_t>(i)].alpha,
                           solutions[static_cast<std::size_t>(s)]);

  Mat hp(n, n_h);
  for (Index z = 0; z < n_h; ++z) {
    SpacetimeForm stat = static_kernel_solution(
        th, k, mb.modes.col(kern[static_cast<std::size_t>(z)]));
    for (Index i = 0; i < n; ++i)
      hp(i, z) = lorentz_pairing(th, gens[static_cast<std::size_t>(i)].alpha, stat);
  }

  const double pscale =
      r.solution_pairings.size() > 0 ? r.solution_pairings.cwiseAbs().maxCoeff() : 0.0;
  const double wscale = pm.w.cwiseAbs().maxCoeff();
  const double hscale = hp.size() > 0 ? hp.cwiseAbs().maxCoeff() : 0.0;

  // Separating direction: a solution invisible to every generator must be
  // gauge trivial, i.e. carry (numerically) no field strength.
  const int nsamp = 9;
  for (Index s = 0; s < ns; ++s) {
    double colmax = n > 0 ? r.solution_pairings.col(s).cwiseAbs().maxCoeff() : 0.0;
    if (colmax > kNullTol * pscale) continue;
    double fnum = 0.0, fden = 0.0;
    for (int q = 0; q < nsamp; ++q) {
      double t = t_lo + (t_hi - t_lo) * (q + 0.5) / nsamp;
      auto [at, as] = eval_potential(th, solutions[static_cast<std::size_t>(s)], t);
      auto [bt, bs] = eval_potential_dt(th, solutions[static_cast<std::size_t>(s)], t);
      (void)bt;
      Vec ft = bs - th.coboundary(k) * at;
      double fs = 0.0;
      if (k + 1 <= th.dim()) fs = th.block_norm(k + 1, th.coboundary(k + 1) * as);
      fnum = std::max(fnum, th.block_norm(k, ft) + fs);
      fden = std::max(fden, th.block_norm(k, as) + th.block_norm(k - 1, at));
    }
    bool trivial = fnum <= 1e-6 * std::max(fden, 1e-300);
    if (trivial) {
      r.gauge_trivial_solutions.push_back(sol_label(s));
    } else {
      r.separating = false;
      r.violations.push_back("solution " + sol_label(s) +
                             " pairs to zero with every generator but carries "
                             "nonzero field strength");
    }
  }

  // Non-redundancy: a generator invisible to the whole spanning family is
  // quotient-null; a detector in that state contradicts its construction.
  const double scale_all = std::max({pscale, wscale, hscale});
  Index null_count = 0;
  for (Index i = 0; i < n; ++i) {
    double rowmax = pm.w.row(i).cwiseAbs().maxCoeff();
    if (n_h > 0) rowmax = std::max(rowmax, hp.row(i).cwiseAbs().maxCoeff());
    if (ns > 0)
      rowmax = std::max(rowmax, r.solution_pairings.row(i).cwiseAbs().maxCoeff());
    if (rowmax > kNullTol * scale_all) continue;
    ++null_count;
    r.quotient_null_generators.push_back(gens[static_cast<std::size_t>(i)].label);
    if (gens[static_cast<std::size_t>(i)].harmonic_detector) {
      r.non_redundant = false;
      r.violations.push_back("detector " + gens[static_cast<std::size_t>(i)].label +
                             " pairs to zero with the spanning family");
    }
  }

  Mat stacked(n, n + n_h + ns);
  stacked.leftCols(n) = pm.w;
  if (n_h > 0) stacked.middleCols(n, n_h) = hp;
  if (ns > 0) stacked.rightCols(ns) = r.solution_pairings;
  Eigen::JacobiSVD<Mat> svd(stacked);
  const Vec sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  Index rank = 0;
  if (smax > 0.0)
    for (Index i = 0; i < sv.size(); ++i)
      if (sv[i] > kNullTol * smax) ++rank;
  r.spanning_rank = rank;
  r.expected_rank = n - null_count;
  if (r.spanning_rank < r.expected_rank) {
    r.violations.push_back(
        "spanning family too small: pairing rank " + std::to_string(r.spanning_rank) +
        " is below the " + std::to_string(r.expected_rank) +
        " non-null generators");
  }
  return r;
}

double ccr_commutator_coefficient(const Mat& w, const Vec& u, const Vec& v) {
  CF_REQUIRE(w.rows() == w.cols(), "precondition: structure matrix must be square");
  CF_REQUIRE(u.size() == w.rows() && v.size() == w.rows(),
             "precondition: word coefficients must match the generator count");
  // Degree-2 word u (x) v - v (x) u, reduced termwise by the ideal relation
  // e_i (x) e_j - e_j (x) e_i = i W_ij; each unordered pair contributes once.
  Mat q = u * v.transpose() - v * u.transpose();
  return 0.5 * q.cwiseProduct(w).sum();
}

}  // namespace cauchyform
