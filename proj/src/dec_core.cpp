#include "cauchyform/dec_core.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>

namespace cauchyform {

SpMat exterior_derivative(const SimplicialComplex& c, int k) {
  CF_REQUIRE(k >= 0 && k < c.dim, "precondition: exterior derivative degree ", k,
             " out of range for dimension ", c.dim);
  const auto inc = incidence(c, k + 1);
  std::vector<Triplet> t;
  t.reserve(inc.size());
  for (const auto& e : inc) t.emplace_back(e.col, e.row, static_cast<double>(e.sign));
  SpMat d(c.count(k + 1), c.count(k));
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

namespace {

// barycentric gradients of an n-simplex embedded in R^3 (columns: grad λ_1..λ_n;
// grad λ_0 = -sum) and its volume
void element_geometry(const SimplicialComplex& c, Index i, Eigen::Matrix<double, 3, 2>& grads,
                      double& volume) {
  const auto& s = c.simp[c.dim][i];
  if (c.dim == 1) {
    const Eigen::Vector3d e = c.vertices[s[1]] - c.vertices[s[0]];
    volume = e.norm();
    CF_REQUIRE(volume > 1e-14, "invariant-violation: degenerate simplex [", s[0], ",", s[1], "]");
    grads.col(0) = e / (volume * volume);
    grads.col(1).setZero();
    return;
  }
  Eigen::Matrix<double, 3, 2> E;
  E.col(0) = c.vertices[s[1]] - c.vertices[s[0]];
  E.col(1) = c.vertices[s[2]] - c.vertices[s[0]];
  volume = 0.5 * E.col(0).cross(E.col(1)).norm();
  CF_REQUIRE(volume > 1e-14, "invariant-violation: degenerate simplex [", s[0], ",", s[1], ",",
             s[2], "]");
  grads = E * (E.transpose() * E).inverse();
}

}  // namespace

SpMat mass_matrix(const SimplicialComplex& c, int k) {
  CF_REQUIRE(k >= 0 && k <= c.dim, "precondition: mass degree ", k, " out of range");
  const int n = c.dim;
  std::vector<Triplet> trip;
  SpMat m(c.count(k), c.count(k));

  if (k == n) {  // constant volume forms with unit integral: diagonal 1/volume
    for (Index i = 0; i < c.count(n); ++i) {
      const double v = simplex_volume(c, n, i);
      CF_REQUIRE(v > 1e-14, "invariant-violation: degenerate simplex id ", i);
      trip.emplace_back(i, i, 1.0 / v);
    }
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

  for (Index t = 0; t < c.count(n); ++t) {
    const auto& s = c.simp[n][t];
    Eigen::Matrix<double, 3, 2> gtail;
    double vol = 0;
    element_geometry(c, t, gtail, vol);
    std::vector<Eigen::Vector3d> g(n + 1);
    g[0].setZero();
    for (int i = 1; i <= n; ++i) {
      g[i] = gtail.col(i - 1);
      g[0] -= g[i];
    }
    // ∫ λ_p λ_q = vol (1 + δ_pq) / ((n+1)(n+2))
    auto lpq = [&](int p, int q) { return vol * (p == q ? 2.0 : 1.0) / ((n + 1) * (n + 2)); };

    if (k == 0) {
      for (int p = 0; p <= n; ++p)
        for (int q = 0; q <= n; ++q) trip.emplace_back(s[p], s[q], lpq(p, q));
    } else {  // k == 1 < n or the 1-D top handled above; Whitney edge forms
      std::vector<std::pair<int, int>> local_edges;
      for (int a = 0; a <= n; ++a)
        for (int b = a + 1; b <= n; ++b) local_edges.push_back({a, b});
      for (const auto& [a, b] : local_edges) {
        const Index ea = c.index_of(1, {s[a], s[b]});
        for (const auto& [p, q] : local_edges) {
          const Index eb = c.index_of(1, {s[p], s[q]});
          const double val = lpq(a, p) * g[b].dot(g[q]) - lpq(a, q) * g[b].dot(g[p]) -
                             lpq(b, p) * g[a].dot(g[q]) + lpq(b, q) * g[a].dot(g[p]);
          trip.emplace_back(ea, eb, val);
        }
      }
    }
  }
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Vec lumped_mass(const SimplicialComplex& c, int k) {
  const SpMat m = mass_matrix(c, k);
  Vec lump = m * Vec::Ones(m.cols());
  for (Index i = 0; i < lump.size(); ++i)
    CF_REQUIRE(lump[i] > 0, "precondition: nonpositive lumped mass at ", k, "-simplex ", i,
               "; the triangulation is too anisotropic for the row-sum metric "
               "(balance the mesh resolution parameters)");
  return lump;
}

Mat codifferential(const SimplicialComplex& c, int k, MassFamily family) {
  CF_REQUIRE(k >= 1 && k <= c.dim, "precondition: codifferential degree ", k, " out of range");
  const SpMat d = exterior_derivative(c, k - 1);
  if (family == MassFamily::lumped) {
    const Vec mk = lumped_mass(c, k), mk1 = lumped_mass(c, k - 1);
    return mk1.cwiseInverse().asDiagonal() * Mat(d.transpose()) * Mat(mk.asDiagonal());
  }
  const SpMat mk = mass_matrix(c, k), mk1 = mass_matrix(c, k - 1);
  Eigen::SimplicialLDLT<SpMat> solver(mk1);
  CF_REQUIRE(solver.info() == Eigen::Success, "invariant-violation: mass factorization failed");
  return solver.solve(Mat(d.transpose() * mk));
}

Mat hodge_laplacian(const SimplicialComplex& c, int k, MassFamily family) {
  CF_REQUIRE(k >= 0 && k <= c.dim, "precondition: laplacian degree ", k, " out of range");
  Mat L = Mat::Zero(c.count(k), c.count(k));
  if (k < c.dim) L += codifferential(c, k + 1, family) * Mat(exterior_derivative(c, k));
  if (k > 0) L += Mat(exterior_derivative(c, k - 1)) * codifferential(c, k, family);
  return L;
}

Vec interpolate_scalar(const SimplicialComplex& c,
                       const std::function<double(const Eigen::Vector3d&)>& f) {
  Vec out(c.count(0));
  for (Index v = 0; v < c.count(0); ++v) out[v] = f(c.vertices[v]);
  return out;
}

Vec interpolate_oneform(const SimplicialComplex& c,
                        const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f) {
  CF_REQUIRE(c.dim >= 1, "precondition: one-form interpolation needs dim >= 1");
  Vec out(c.count(1));
  // 3-point Gauss-Legendre on [0,1]
  const double x1 = 0.5 * (1.0 - std::sqrt(3.0 / 5.0));
  const double x3 = 0.5 * (1.0 + std::sqrt(3.0 / 5.0));
  const double pts[3] = {x1, 0.5, x3};
  const double wts[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (Index e = 0; e < c.count(1); ++e) {
    const Eigen::Vector3d a = c.vertices[c.simp[1][e][0]];
    const Eigen::Vector3d b = c.vertices[c.simp[1][e][1]];
    double acc = 0;
    for (int q = 0; q < 3; ++q) acc += wts[q] * f(a + pts[q] * (b - a)).dot(b - a);
    out[e] = acc;
  }
  return out;
}

Vec interpolate_density(const SimplicialComplex& c,
                        const std::function<double(const Eigen::Vector3d&)>& f) {
  const int n = c.dim;
  Vec out(c.count(n));
  for (Index t = 0; t < c.count(n); ++t) {
    const auto& s = c.simp[n][t];
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (Index v : s) centroid += c.vertices[v];
    centroid /= (n + 1);
    double sign = 1.0;
    if (n == 2) {  // density taken w.r.t. the in-plane orientation of the sorted tuple
      const Eigen::Vector3d nrm = (c.vertices[s[1]] - c.vertices[s[0]])
                                      .cross(c.vertices[s[2]] - c.vertices[s[0]]);
      if (std::abs(nrm.z()) > 1e-14) sign = nrm.z() > 0 ? 1.0 : -1.0;
    }
    out[t] = sign * f(centroid) * simplex_volume(c, n, t);
  }
  return out;
}

void export_coo(const SpMat& m, const std::string& path) {
  std::ofstream out(path);
  CF_REQUIRE(out.good(), "io-error: cannot open ", path, " for writing");
  out << "# rows cols nnz\n" << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  out.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace cauchyform
