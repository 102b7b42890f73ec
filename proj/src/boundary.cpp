#include "cauchyform/boundary.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace cauchyform {

namespace {

SpMat sparse_diag(const Vec& d) {
  SpMat m(d.size(), d.size());
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat selector_from_mask(const std::vector<char>& keep) {
  Index n = static_cast<Index>(keep.size());
  std::vector<Triplet> t;
  Index row = 0;
  for (Index i = 0; i < n; ++i)
    if (keep[static_cast<size_t>(i)]) t.emplace_back(row++, i, 1.0);
  SpMat p(row, n);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

Eigen::Vector3d centroid(const SimplicialComplex& c, int k, Index i) {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  const auto& s = c.simp[static_cast<size_t>(k)][static_cast<size_t>(i)];
  for (Index v : s) x += c.vertices[static_cast<size_t>(v)];
  return x / static_cast<double>(s.size());
}

// Barycentric gradients of a top simplex (rows: one per vertex).
Mat top_gradients(const SimplicialComplex& c, Index top) {
  const auto& s = c.simp[static_cast<size_t>(c.dim)][static_cast<size_t>(top)];
  int n = c.dim;
  Eigen::Matrix<double, 3, Eigen::Dynamic> e(3, n);
  for (int j = 1; j <= n; ++j)
    e.col(j - 1) = c.vertices[static_cast<size_t>(s[static_cast<size_t>(j)])] -
                   c.vertices[static_cast<size_t>(s[0])];
  Eigen::MatrixXd gtail = e * (e.transpose() * e).inverse();  // 3 x n
  Mat g(n + 1, 3);
  g.row(0).setZero();
  for (int j = 1; j <= n; ++j) {
    g.row(j) = gtail.col(j - 1).transpose();
    g.row(0) -= g.row(j);
  }
  return g;
}

}  // namespace

BCTag parse_bc_tag(const std::string& name) {
  if (name == "dirichlet") return BCTag::Dirichlet;
  if (name == "box_tangential") return BCTag::BoxTangential;
  if (name == "box_normal") return BCTag::BoxNormal;
  if (name == "robin_tangential") return BCTag::RobinTangential;
  if (name == "robin_normal") return BCTag::RobinNormal;
  if (name == "maxwell_tangential") return BCTag::MaxwellTangential;
  if (name == "maxwell_normal") return BCTag::MaxwellNormal;
  throw Error(detail::concat("parse-error: unknown boundary condition tag '", name, "'"));
}

std::string bc_tag_name(BCTag tag) {
  switch (tag) {
    case BCTag::Dirichlet: return "dirichlet";
    case BCTag::BoxTangential: return "box_tangential";
    case BCTag::BoxNormal: return "box_normal";
    case BCTag::RobinTangential: return "robin_tangential";
    case BCTag::RobinNormal: return "robin_normal";
    case BCTag::MaxwellTangential: return "maxwell_tangential";
    case BCTag::MaxwellNormal: return "maxwell_normal";
  }
  throw Error("invariant-violation: unhandled boundary condition tag");
}

void BCKind::validate(const SimplicialComplex& c) const {
  bool robin = tag == BCTag::RobinTangential || tag == BCTag::RobinNormal;
  if (!robin) {
    CF_REQUIRE(f.size() == 0, "precondition: coefficient data is only admitted for Robin tags");
    return;
  }
  Index faces = 0;
  int fk = c.dim - 1;
  for (char b : c.is_boundary[static_cast<size_t>(fk)]) faces += (b != 0);
  CF_REQUIRE(f.size() == faces, "precondition: Robin data must carry one value per boundary face (",
             faces, " expected, ", f.size(), " given)");
  for (Index i = 0; i < f.size(); ++i) {
    if (tag == BCTag::RobinTangential)
      CF_REQUIRE(f[i] >= 0.0, "precondition: tangential Robin coefficient must be nonnegative");
    else
      CF_REQUIRE(f[i] <= 0.0, "precondition: normal Robin coefficient must be nonpositive");
  }
}

BoundaryOps::BoundaryOps(const SimplicialComplex& c) : c_(&c) {
  int n = c.dim;
  bool has_boundary = false;
  for (char b : c.is_boundary[0]) has_boundary |= (b != 0);
  if (has_boundary) bdc_ = boundary_complex(c);

  for (int k = 0; k <= n; ++k) {
    Index nk = c.count(k);
    std::vector<char> keep(static_cast<size_t>(nk), 1);
    for (Index i = 0; i < nk; ++i)
      if (c.is_boundary[static_cast<size_t>(k)][static_cast<size_t>(i)]) keep[static_cast<size_t>(i)] = 0;
    P_[static_cast<size_t>(k)] = selector_from_mask(keep);
    // The parent metric must be the diagonal (lumped) one shared by every
    // constrained operator: with a diagonal mass the interior-restricted solve
    // is a local mask, so traces of interior-supported fields vanish by
    // sparsity and the Stokes defect formula below holds as an algebraic
    // identity rather than up to a mass-inverse tail.
    M_[static_cast<size_t>(k)] = sparse_diag(lumped_mass(c, k));

    if (has_boundary && k <= n - 1) {
      Index nb = bdc_.complex.count(k);
      std::vector<Triplet> t;
      for (Index i = 0; i < nb; ++i)
        t.emplace_back(i, bdc_.parent[static_cast<size_t>(k)][static_cast<size_t>(i)], 1.0);
      SpMat tr(nb, nk);
      tr.setFromTriplets(t.begin(), t.end());
      T_[static_cast<size_t>(k)] = tr;
      Mb_[static_cast<size_t>(k)] = mass_matrix(bdc_.complex, k);
      bmass_solver_[static_cast<size_t>(k)] = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
      bmass_solver_[static_cast<size_t>(k)]->compute(Mb_[static_cast<size_t>(k)]);
      CF_REQUIRE(bmass_solver_[static_cast<size_t>(k)]->info() == Eigen::Success,
                 "invariant-violation: boundary mass factorization failed at degree ", k);
    } else {
      T_[static_cast<size_t>(k)] = SpMat(0, nk);
      Mb_[static_cast<size_t>(k)] = SpMat(0, 0);
    }

    const SpMat& P = P_[static_cast<size_t>(k)];
    if (P.rows() > 0) {
      SpMat m_int = P * M_[static_cast<size_t>(k)] * P.transpose();
      interior_solver_[static_cast<size_t>(k)] = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
      interior_solver_[static_cast<size_t>(k)]->compute(m_int);
      CF_REQUIRE(interior_solver_[static_cast<size_t>(k)]->info() == Eigen::Success,
                 "invariant-violation: interior mass factorization failed at degree ", k);
    }

    // nearest-interior recovery targets for boundary k-simplices
    auto& rec = recovery_[static_cast<size_t>(k)];
    rec.assign(static_cast<size_t>(nk), -1);
    std::vector<Index> interior_idx;
    for (Index i = 0; i < nk; ++i)
      if (!c.is_boundary[static_cast<size_t>(k)][static_cast<size_t>(i)]) interior_idx.push_back(i);
    if (!interior_idx.empty()) {
      for (Index i = 0; i < nk; ++i) {
        if (!c.is_boundary[static_cast<size_t>(k)][static_cast<size_t>(i)]) continue;
        Eigen::Vector3d x = centroid(c, k, i);
        double best = std::numeric_limits<double>::infinity();
        Index arg = interior_idx[0];
        for (Index j : interior_idx) {
          double d2 = (centroid(c, k, j) - x).squaredNorm();
          if (d2 < best - 1e-15 || (std::abs(d2 - best) <= 1e-15 && j < arg)) {
            best = d2;
            arg = j;
          }
        }
        rec[static_cast<size_t>(i)] = arg;
      }
    }
  }
}

Vec BoundaryOps::tangential_trace(int k, const Vec& omega) const {
  CF_REQUIRE(k >= 0 && k <= c_->dim - 1, "precondition: tangential trace needs degree in [0, ",
             c_->dim - 1, "], got ", k);
  CF_REQUIRE(omega.size() == c_->count(k), "precondition: cochain length mismatch");
  return T_[static_cast<size_t>(k)] * omega;
}

Vec BoundaryOps::strong_codifferential(int k, const Vec& omega) const {
  CF_REQUIRE(k >= 1 && k <= c_->dim, "precondition: codifferential needs degree in [1, ", c_->dim,
             "], got ", k);
  CF_REQUIRE(omega.size() == c_->count(k), "precondition: cochain length mismatch");
  SpMat d = exterior_derivative(*c_, k - 1);
  Vec w = d.transpose() * (M_[static_cast<size_t>(k)] * omega);
  const SpMat& P = P_[static_cast<size_t>(k - 1)];
  Vec out = Vec::Zero(c_->count(k - 1));
  if (P.rows() == 0) return out;
  Vec inner = interior_solver_[static_cast<size_t>(k - 1)]->solve(P * w);
  out = P.transpose() * inner;
  return out;
}

Vec BoundaryOps::recovery_codifferential(int k, const Vec& omega) const {
  Vec out = strong_codifferential(k, omega);
  const auto& rec = recovery_[static_cast<size_t>(k - 1)];
  for (Index i = 0; i < out.size(); ++i) {
    if (!c_->is_boundary[static_cast<size_t>(k - 1)][static_cast<size_t>(i)]) continue;
    Index j = rec[static_cast<size_t>(i)];
    if (j >= 0) out[i] = out[j];
  }
  return out;
}

Vec BoundaryOps::normal_trace(int k, const Vec& omega) const {
  CF_REQUIRE(k >= 1 && k <= c_->dim, "precondition: normal trace needs degree in [1, ", c_->dim,
             "], got ", k);
  CF_REQUIRE(omega.size() == c_->count(k), "precondition: cochain length mismatch");
  const SpMat& T = T_[static_cast<size_t>(k - 1)];
  if (T.rows() == 0) return Vec(0);
  SpMat d = exterior_derivative(*c_, k - 1);
  Vec w = d.transpose() * (M_[static_cast<size_t>(k)] * omega);
  Vec deltas = strong_codifferential(k, omega);
  Vec r = T * (w - M_[static_cast<size_t>(k - 1)] * deltas);
  return bmass_solver_[static_cast<size_t>(k - 1)]->solve(r);
}

Mat BoundaryOps::normal_trace_matrix(int k) const {
  Index cols = c_->count(k);
  Index rows = T_[static_cast<size_t>(k - 1)].rows();
  Mat out(rows, cols);
  Vec e = Vec::Zero(cols);
  for (Index j = 0; j < cols; ++j) {
    e[j] = 1.0;
    out.col(j) = normal_trace(k, e);
    e[j] = 0.0;
  }
  return out;
}

double BoundaryOps::green_defect(int k, const Vec& alpha, const Vec& beta) const {
  CF_REQUIRE(k >= 0 && k <= c_->dim - 1, "precondition: pairing degree must lie in [0, ",
             c_->dim - 1, "], got ", k);
  CF_REQUIRE(alpha.size() == c_->count(k) && beta.size() == c_->count(k + 1),
             "precondition: cochain length mismatch");
  SpMat d = exterior_derivative(*c_, k);
  double lhs = (d * alpha).dot(M_[static_cast<size_t>(k + 1)] * beta);
  double rhs = alpha.dot(M_[static_cast<size_t>(k)] * strong_codifferential(k + 1, beta));
  return lhs - rhs;
}

Vec tangential_trace(const SimplicialComplex& c, int k, const Vec& omega) {
  return BoundaryOps(c).tangential_trace(k, omega);
}
Vec normal_trace(const SimplicialComplex& c, int k, const Vec& omega) {
  return BoundaryOps(c).normal_trace(k, omega);
}
double green_defect(const SimplicialComplex& c, int k, const Vec& alpha, const Vec& beta) {
  return BoundaryOps(c).green_defect(k, alpha, beta);
}

namespace {

bool tangential_family(BCTag tag) {
  return tag == BCTag::BoxTangential || tag == BCTag::RobinTangential ||
         tag == BCTag::MaxwellTangential;
}

// Kept-dof selector for one spatial degree under a realization.
SpMat kept_selector(const SimplicialComplex& c, int degree, BCTag tag) {
  Index nk = c.count(degree);
  std::vector<char> keep(static_cast<size_t>(nk), 1);
  if (tag == BCTag::Dirichlet) {
    for (Index i = 0; i < nk; ++i) {
      for (Index v : c.simp[static_cast<size_t>(degree)][static_cast<size_t>(i)])
        if (c.is_boundary[0][static_cast<size_t>(v)]) {
          keep[static_cast<size_t>(i)] = 0;
          break;
        }
    }
  } else if (tangential_family(tag)) {
    for (Index i = 0; i < nk; ++i)
      if (c.is_boundary[static_cast<size_t>(degree)][static_cast<size_t>(i)])
        keep[static_cast<size_t>(i)] = 0;
  }
  return selector_from_mask(keep);
}

// Gram matrix of normal contractions of Whitney degree-j basis forms over the
// boundary, weighted by the per-face coefficient. Full-size (N_j x N_j).
SpMat normal_contraction_form(const SimplicialComplex& c, const BoundaryComplex& bdc, int j,
                              const Vec& f) {
  int n = c.dim;
  Index nj = c.count(j);
  std::vector<Triplet> trip;
  if (j < 1 || !bdc.complex.count(0)) {
    SpMat g(nj, nj);
    return g;
  }

  // cofaces of (n-1)-simplices
  std::vector<std::vector<Index>> coface(static_cast<size_t>(c.count(n - 1)));
  {
    auto inc = incidence(c, n);
    for (const auto& e : inc) coface[static_cast<size_t>(e.row)].push_back(e.col);
  }

  Index n_faces = bdc.complex.count(n - 1);
  for (Index bf = 0; bf < n_faces; ++bf) {
    Index pf = bdc.parent[static_cast<size_t>(n - 1)][static_cast<size_t>(bf)];
    CF_REQUIRE(coface[static_cast<size_t>(pf)].size() == 1,
               "invariant-violation: boundary face must have a unique coface");
    Index top = coface[static_cast<size_t>(pf)][0];
    double w = f[bf];
    if (w == 0.0) continue;

    if (n == 1 && j == 1) {
      // point face: contraction of the edge form with the outward direction is ±1/h
      double h = simplex_volume(c, 1, top);
      trip.emplace_back(top, top, w / (h * h));
      continue;
    }
    if (n == 2 && j == 2) {
      // top-form contraction pairs only the unique coface with itself
      double area = simplex_volume(c, 2, top);
      double len = simplex_volume(c, 1, pf);
      trip.emplace_back(top, top, w * len / (area * area));
      continue;
    }
    CF_REQUIRE(n == 2 && j == 1, "precondition: unsupported contraction degree ", j,
               " in dimension ", n);

    const auto& tv = c.simp[2][static_cast<size_t>(top)];
    const auto& fv = c.simp[1][static_cast<size_t>(pf)];
    Eigen::Vector3d xa = c.vertices[static_cast<size_t>(fv[0])];
    Eigen::Vector3d xb = c.vertices[static_cast<size_t>(fv[1])];
    Mat grads = top_gradients(c, top);  // 3 x 3, rows per local vertex
    Eigen::Vector3d tri_n = (c.vertices[static_cast<size_t>(tv[1])] - c.vertices[static_cast<size_t>(tv[0])])
                                .cross(c.vertices[static_cast<size_t>(tv[2])] - c.vertices[static_cast<size_t>(tv[0])]);
    Eigen::Vector3d that = (xb - xa).normalized();
    Eigen::Vector3d nu = that.cross(tri_n.normalized());
    Eigen::Vector3d ctr_t = centroid(c, 2, top);
    if (nu.dot(0.5 * (xa + xb) - ctr_t) < 0) nu = -nu;

    // local edges of the triangle, as (local p, local q) with global p < q
    std::array<std::array<int, 2>, 3> led = {{{0, 1}, {0, 2}, {1, 2}}};
    std::array<Index, 3> gedge{};
    for (int e = 0; e < 3; ++e)
      gedge[static_cast<size_t>(e)] =
          c.index_of(1, {tv[static_cast<size_t>(led[static_cast<size_t>(e)][0])],
                         tv[static_cast<size_t>(led[static_cast<size_t>(e)][1])]});

    const double g1 = (1.0 - std::sqrt(3.0 / 5.0)) / 2.0;
    const double g3 = (1.0 + std::sqrt(3.0 / 5.0)) / 2.0;
    std::array<double, 3> qs = {g1, 0.5, g3};
    std::array<double, 3> qw = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    double flen = (xb - xa).norm();

    Eigen::Vector3d x0 = c.vertices[static_cast<size_t>(tv[0])];
    Mat vals(3, 3);  // edge x quad point: contraction value
    for (int q = 0; q < 3; ++q) {
      Eigen::Vector3d x = xa + qs[static_cast<size_t>(q)] * (xb - xa);
      Eigen::Vector3d lam;
      lam[1] = grads.row(1).dot(x - x0);
      lam[2] = grads.row(2).dot(x - x0);
      lam[0] = 1.0 - lam[1] - lam[2];
      for (int e = 0; e < 3; ++e) {
        int p = led[static_cast<size_t>(e)][0], r = led[static_cast<size_t>(e)][1];
        Eigen::Vector3d wform = lam[p] * grads.row(r).transpose() - lam[r] * grads.row(p).transpose();
        vals(e, q) = wform.dot(nu);
      }
    }
    for (int e1 = 0; e1 < 3; ++e1)
      for (int e2 = 0; e2 < 3; ++e2) {
        double s = 0;
        for (int q = 0; q < 3; ++q)
          s += qw[static_cast<size_t>(q)] * vals(e1, q) * vals(e2, q);
        trip.emplace_back(gedge[static_cast<size_t>(e1)], gedge[static_cast<size_t>(e2)],
                          w * flen * s);
      }
  }
  SpMat g(nj, nj);
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

// Consistent boundary-complex mass at degree j with a per-top-face weight.
SpMat weighted_boundary_mass(const BoundaryComplex& bdc, int j, const Vec& f) {
  const SimplicialComplex& b = bdc.complex;
  int nb = b.dim;
  Index nj = b.count(j);
  std::vector<Triplet> trip;
  if (nb == 0) {
    for (Index i = 0; i < nj; ++i) trip.emplace_back(i, i, f[i]);
  } else if (j == nb) {
    for (Index i = 0; i < nj; ++i) trip.emplace_back(i, i, f[i] / simplex_volume(b, nb, i));
  } else {
    CF_REQUIRE(nb == 1 && j == 0, "precondition: unsupported weighted boundary mass degree");
    for (Index e = 0; e < b.count(1); ++e) {
      double len = simplex_volume(b, 1, e);
      const auto& ev = b.simp[1][static_cast<size_t>(e)];
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
          trip.emplace_back(ev[static_cast<size_t>(p)], ev[static_cast<size_t>(q)],
                            f[e] * len * (p == q ? 1.0 / 3.0 : 1.0 / 6.0));
    }
  }
  SpMat m(nj, nj);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

ConstrainedBlock build_block(const SimplicialComplex& c, const BoundaryComplex& bdc, int degree,
                             const BCKind& bc) {
  int n = c.dim;
  ConstrainedBlock blk;
  blk.degree = degree;
  blk.P = kept_selector(c, degree, bc.tag);
  Vec ml_full = lumped_mass(c, degree);
  blk.Mlump = blk.P * ml_full;

  SpMat A(blk.P.rows(), blk.P.rows());
  if (degree < n) {
    SpMat K = exterior_derivative(c, degree) * blk.P.transpose();
    SpMat Mup = sparse_diag(lumped_mass(c, degree + 1));
    A = A + SpMat(K.transpose() * Mup * K);
  }
  if (degree > 0) {
    SpMat W = exterior_derivative(c, degree - 1).transpose() *
              (sparse_diag(ml_full) * blk.P.transpose());
    Vec md = lumped_mass(c, degree - 1);
    if (tangential_family(bc.tag)) {
      SpMat Pd = kept_selector(c, degree - 1, BCTag::BoxTangential);
      SpMat Wr = Pd * W;
      Vec mr = Pd * md;
      A = A + SpMat(Wr.transpose() * sparse_diag(mr.cwiseInverse()) * Wr);
    } else {
      A = A + SpMat(W.transpose() * sparse_diag(md.cwiseInverse()) * W);
    }
  }
  if (bc.tag == BCTag::RobinTangential && degree >= 1) {
    SpMat G = normal_contraction_form(c, bdc, degree, bc.f);
    A = A + SpMat(blk.P * G * blk.P.transpose());
  }
  if (bc.tag == BCTag::RobinNormal && degree <= n - 1 && bdc.complex.count(0) > 0) {
    Index nbd = bdc.complex.count(degree);
    std::vector<Triplet> t;
    for (Index i = 0; i < nbd; ++i)
      t.emplace_back(i, bdc.parent[static_cast<size_t>(degree)][static_cast<size_t>(i)], 1.0);
    SpMat T(nbd, c.count(degree));
    T.setFromTriplets(t.begin(), t.end());
    SpMat Mw = weighted_boundary_mass(bdc, degree, bc.f);
    SpMat TP = T * blk.P.transpose();
    A = A - SpMat(TP.transpose() * Mw * TP);
  }
  blk.A = A;
  return blk;
}

}  // namespace

const ConstrainedBlock& ConstrainedOperator::block(int degree) const {
  for (const auto& b : blocks)
    if (b.degree == degree) return b;
  throw Error(detail::concat("precondition: no block of degree ", degree,
                             " in this constrained operator"));
}

Index ConstrainedOperator::total_dofs() const {
  Index t = 0;
  for (const auto& b : blocks) t += b.P.rows();
  return t;
}

ConstrainedOperator build_constrained(const SimplicialComplex& c, int k, const BCKind& bc) {
  int n = c.dim;
  CF_REQUIRE(k >= 0 && k <= n + 1, "precondition: spacetime degree must lie in [0, ", n + 1,
             "], got ", k);
  bc.validate(c);

  bool has_boundary = false;
  for (char b : c.is_boundary[0]) has_boundary |= (b != 0);
  BoundaryComplex bdc;
  if (has_boundary) bdc = boundary_complex(c);

  ConstrainedOperator op;
  op.mesh = &c;
  op.bc = bc;
  op.k = k;
  if (k > 0 && k - 1 <= n) op.blocks.push_back(build_block(c, bdc, k - 1, bc));
  if (k <= n) op.blocks.push_back(build_block(c, bdc, k, bc));
  CF_REQUIRE(!op.blocks.empty(), "invariant-violation: constrained operator has no blocks");
  for (const auto& blk : op.blocks) {
    CF_REQUIRE(blk.Mlump.minCoeff() > 0, "invariant-violation: nonpositive lumped mass entry");
    double asym = 0, scale = 0;
    SpMat D = SpMat(blk.A - SpMat(blk.A.transpose()));
    for (int j = 0; j < D.outerSize(); ++j)
      for (SpMat::InnerIterator it(D, j); it; ++it) asym = std::max(asym, std::abs(it.value()));
    for (int j = 0; j < blk.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(blk.A, j); it; ++it) scale = std::max(scale, std::abs(it.value()));
    CF_REQUIRE(asym <= 1e-10 * std::max(scale, 1.0),
               "invariant-violation: constrained stiffness is not symmetric");
  }
  return op;
}

SpMat bc_coboundary(const ConstrainedOperator& op) {
  CF_REQUIRE(op.blocks.size() == 2, "precondition: coboundary needs both degree blocks");
  const ConstrainedBlock& lo = op.blocks[0];
  const ConstrainedBlock& hi = op.blocks[1];
  return hi.P * exterior_derivative(*op.mesh, lo.degree) * lo.P.transpose();
}

SpMat bc_codifferential(const ConstrainedOperator& op) {
  CF_REQUIRE(op.blocks.size() == 2, "precondition: codifferential needs both degree blocks");
  const ConstrainedBlock& lo = op.blocks[0];
  const ConstrainedBlock& hi = op.blocks[1];
  SpMat d = bc_coboundary(op);
  return sparse_diag(lo.Mlump.cwiseInverse()) * SpMat(d.transpose()) * sparse_diag(hi.Mlump);
}

double box_green_defect(const ConstrainedOperator& op_alpha, const Vec& alpha,
                        const ConstrainedOperator& op_beta, const Vec& beta) {
  CF_REQUIRE(op_alpha.bc.tag == op_beta.bc.tag,
             "precondition: pairing requires matching boundary condition tags (",
             bc_tag_name(op_alpha.bc.tag), " vs ", bc_tag_name(op_beta.bc.tag), ")");
  CF_REQUIRE(op_alpha.k == op_beta.k && op_alpha.total_dofs() == op_beta.total_dofs(),
             "precondition: pairing requires matching degree and dof layout");
  CF_REQUIRE(alpha.size() == op_alpha.total_dofs() && beta.size() == op_beta.total_dofs(),
             "precondition: stacked block vector length mismatch");
  double acc = 0;
  Index off = 0;
  for (size_t b = 0; b < op_alpha.blocks.size(); ++b) {
    const auto& blk = op_alpha.blocks[b];
    Index m = blk.P.rows();
    Vec a = alpha.segment(off, m);
    Vec bb = beta.segment(off, m);
    acc += (blk.A * a).dot(bb) - a.dot(blk.A * bb);
    off += m;
  }
  return acc;
}

namespace {

struct TripleMachine {
  const SimplicialComplex* c;
  BoundaryOps ops;
  explicit TripleMachine(const SimplicialComplex& cc) : c(&cc), ops(cc) {}

  // S* u = delta_s(d u) + d(delta_c u) at degree j
  Vec strong_form(int j, const Vec& u) const {
    int n = c->dim;
    Vec out = Vec::Zero(c->count(j));
    if (j < n) {
      SpMat d = exterior_derivative(*c, j);
      out += ops.strong_codifferential(j + 1, d * u);
    }
    if (j > 0) {
      SpMat dm = exterior_derivative(*c, j - 1);
      out += dm * ops.recovery_codifferential(j, u);
    }
    return out;
  }

  double lhs(int j, const Vec& u, const Vec& v) const {
    const SpMat& M = ops.parent_mass(j);
    return strong_form(j, u).dot(M * v) - u.dot(M * strong_form(j, v));
  }

  double rhs(int j, const Vec& u, const Vec& v) const {
    int n = c->dim;
    double acc = 0;
    if (j < n) {
      SpMat d = exterior_derivative(*c, j);
      Vec tu = ops.tangential_trace(j, u), tv = ops.tangential_trace(j, v);
      Vec ndu = ops.normal_trace(j + 1, d * u), ndv = ops.normal_trace(j + 1, d * v);
      const SpMat& Mb = ops.boundary_mass(j);
      acc += tu.dot(Mb * ndv) - tv.dot(Mb * ndu);
    }
    if (j > 0) {
      Vec du = ops.recovery_codifferential(j, u), dv = ops.recovery_codifferential(j, v);
      Vec tdu = ops.tangential_trace(j - 1, du), tdv = ops.tangential_trace(j - 1, dv);
      Vec nu = ops.normal_trace(j, u), nv = ops.normal_trace(j, v);
      const SpMat& Mb = ops.boundary_mass(j - 1);
      acc += tdu.dot(Mb * nv) - tdv.dot(Mb * nu);
    }
    return acc;
  }
};

std::vector<int> block_degrees(int n, int k) {
  std::vector<int> deg;
  if (k > 0 && k - 1 <= n) deg.push_back(k - 1);
  if (k <= n) deg.push_back(k);
  return deg;
}

Vec unit_m(const SpMat& M, Vec v) {
  double s = std::sqrt(std::max(v.dot(M * v), 1e-300));
  return v / s;
}

// distance of each j-simplex centroid to the nearest boundary vertex
Vec boundary_distance(const SimplicialComplex& c, int j) {
  std::vector<Eigen::Vector3d> bpts;
  for (Index v = 0; v < c.count(0); ++v)
    if (c.is_boundary[0][static_cast<size_t>(v)]) bpts.push_back(c.vertices[static_cast<size_t>(v)]);
  Vec out(c.count(j));
  for (Index i = 0; i < c.count(j); ++i) {
    Eigen::Vector3d x = centroid(c, j, i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bpts) best = std::min(best, (x - b).norm());
    out[i] = bpts.empty() ? std::numeric_limits<double>::infinity() : best;
  }
  return out;
}

// smooth deterministic test fields per degree, mixed by a few random coefficients
Vec smooth_field(const SimplicialComplex& c, int j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double a = u(rng), b = u(rng), d = u(rng);
  int n = c.dim;
  if (j == 0) {
    auto f = [&](const Eigen::Vector3d& x) {
      return std::sin(x[0] + a) + 0.5 * std::cos(2.0 * x[1] + b) + d * x[0] * x[1];
    };
    return interpolate_scalar(c, f);
  }
  if (j == 1) {
    auto F = [&](const Eigen::Vector3d& x) {
      return Eigen::Vector3d(std::sin(x[1] + a) + d * x[0], std::cos(x[0] + b) - d * x[1] * x[1],
                             n == 1 ? 0.0 : 0.0);
    };
    return interpolate_oneform(c, F);
  }
  auto g = [&](const Eigen::Vector3d& x) {
    return std::cos(x[0] + a) * std::cos(x[1] + b) + d;
  };
  return interpolate_density(c, g);
}

double smooth_defect(const SimplicialComplex& c, int k, std::uint64_t seed) {
  TripleMachine tm(c);
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int j : block_degrees(c.dim, k)) {
    for (int rep = 0; rep < 3; ++rep) {
      Vec u = unit_m(tm.ops.parent_mass(j), smooth_field(c, j, rng));
      Vec v = unit_m(tm.ops.parent_mass(j), smooth_field(c, j, rng));
      worst = std::max(worst, std::abs(tm.lhs(j, u, v) - tm.rhs(j, u, v)));
    }
  }
  return worst;
}

}  // namespace

TripleIdentityReport triple_identity_check(const SimplicialComplex& coarse, int k, int samples,
                                           std::uint64_t seed) {
  CF_REQUIRE(samples > 0, "precondition: sample count must be positive");
  TripleIdentityReport rep;
  TripleMachine tm(coarse);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int j : block_degrees(coarse.dim, k)) {
    Vec dist = boundary_distance(coarse, j);
    double dmax = dist.maxCoeff();
    for (int rep_i = 0; rep_i < samples; ++rep_i) {
      Vec u = Vec::Zero(coarse.count(j)), v = Vec::Zero(coarse.count(j));
      for (Index i = 0; i < u.size(); ++i)
        if (dist[i] >= 0.45 * dmax) {
          u[i] = gauss(rng);
          v[i] = gauss(rng);
        }
      if (u.norm() == 0) continue;
      const SpMat& M = tm.ops.parent_mass(j);
      u = unit_m(M, u);
      v = unit_m(M, v);
      // relative to the pairing magnitudes, as the identity is algebraic and
      // the top-degree masses scale like inverse simplex volumes
      auto mnorm = [&](const Vec& w) { return std::sqrt(std::max(w.dot(M * w), 0.0)); };
      Vec su = tm.strong_form(j, u), sv = tm.strong_form(j, v);
      double scale = std::max(1.0, mnorm(su) + mnorm(sv));
      rep.interior_max =
          std::max(rep.interior_max, std::abs(tm.lhs(j, u, v) - tm.rhs(j, u, v)) / scale);
      double diag = (std::abs(tm.lhs(j, u, u)) + std::abs(tm.rhs(j, u, u))) / scale;
      rep.diagonal_max = std::max(rep.diagonal_max, diag);
    }
  }

  rep.smooth_coarse = smooth_defect(coarse, k, seed + 1);
  SimplicialComplex fine = refine(coarse);
  rep.smooth_refined = smooth_defect(fine, k, seed + 1);
  double floor_v = 1e-12;
  rep.decay_factor = rep.smooth_coarse / std::max(rep.smooth_refined, 1e-300);
  rep.pass = rep.interior_max <= 1e-10 && rep.diagonal_max <= 1e-10 &&
             (rep.smooth_refined <= rep.smooth_coarse / 1.5 ||
              (rep.smooth_coarse <= floor_v && rep.smooth_refined <= floor_v));
  return rep;
}

TraceSurjectivityReport trace_surjectivity(const SimplicialComplex& c, int k) {
  BoundaryOps ops(c);
  int n = c.dim;
  TraceSurjectivityReport rep;
  rep.full_row_rank = true;
  for (int j : block_degrees(n, k)) {
    // stacked trace map of this degree block on its own unconstrained space
    Index nj = c.count(j);
    std::vector<Mat> rows;
    if (j <= n - 1) rows.push_back(Mat(ops.trace_matrix(j)));
    if (j >= 1) {
      rows.push_back(ops.normal_trace_matrix(j));
      Mat dc(c.count(j - 1), nj);
      Vec e = Vec::Zero(nj);
      for (Index col = 0; col < nj; ++col) {
        e[col] = 1.0;
        dc.col(col) = ops.recovery_codifferential(j, e);
        e[col] = 0.0;
      }
      rows.push_back(Mat(ops.trace_matrix(j - 1)) * dc);
    }
    if (j <= n - 1) {
      Mat nd = ops.normal_trace_matrix(j + 1) * Mat(exterior_derivative(c, j));
      rows.push_back(nd);
    }
    Index block_rows = 0;
    for (const auto& m : rows) block_rows += m.rows();
    if (block_rows == 0) continue;
    Mat stacked = Mat::Zero(block_rows, nj);
    Index off = 0;
    for (const auto& m : rows) {
      stacked.block(off, 0, m.rows(), m.cols()) = m;
      off += m.rows();
    }
    Eigen::ColPivHouseholderQR<Mat> qr(stacked.transpose());
    rep.rows += block_rows;
    rep.rank += qr.rank();
    rep.full_row_rank = rep.full_row_rank && (qr.rank() == block_rows);
  }
  return rep;
}

}  // namespace cauchyform
