#include "cauchyform/cohomology.hpp"

#include <cmath>

#include "cauchyform/propagator.hpp"

namespace cauchyform {

Index integer_rank(std::vector<std::vector<std::int64_t>> m) {
  if (m.empty() || m[0].empty()) return 0;
  size_t rows = m.size(), cols = m[0].size();
  for (const auto& row : m)
    CF_REQUIRE(row.size() == cols, "precondition: ragged integer matrix");

  std::int64_t prev = 1;
  size_t rank = 0, col = 0;
  for (size_t r = 0; r < rows && col < cols; ++col) {
    size_t piv = r;
    while (piv < rows && m[piv][col] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[r], m[piv]);
    std::int64_t p = m[r][col];
    for (size_t i = r + 1; i < rows; ++i) {
      for (size_t j = col + 1; j < cols; ++j) {
        __int128 num = static_cast<__int128>(m[i][j]) * p -
                       static_cast<__int128>(m[i][col]) * m[r][j];
        CF_REQUIRE(num % prev == 0, "invariant-violation: fraction-free elimination broke exactness");
        __int128 q = num / prev;
        CF_REQUIRE(q <= INT64_MAX && q >= INT64_MIN,
                   "invariant-violation: integer overflow in rank elimination");
        m[i][j] = static_cast<std::int64_t>(q);
      }
      m[i][col] = 0;
    }
    prev = p;
    ++r;
    rank = r;
  }
  return static_cast<Index>(rank);
}

namespace {

// integer coboundary matrix rows = (k+1)-simplices, cols = k-simplices,
// optionally restricted to simplices not contained in ∂Σ
std::vector<std::vector<std::int64_t>> coboundary_int(const SimplicialComplex& c, int k,
                                                      bool relative) {
  Index nr = c.count(k + 1), nc = c.count(k);
  std::vector<Index> rmap(static_cast<size_t>(nr), -1), cmap(static_cast<size_t>(nc), -1);
  Index nrr = 0, ncc = 0;
  for (Index i = 0; i < nr; ++i)
    if (!relative || !c.is_boundary[static_cast<size_t>(k + 1)][static_cast<size_t>(i)])
      rmap[static_cast<size_t>(i)] = nrr++;
  for (Index i = 0; i < nc; ++i)
    if (!relative || !c.is_boundary[static_cast<size_t>(k)][static_cast<size_t>(i)])
      cmap[static_cast<size_t>(i)] = ncc++;
  std::vector<std::vector<std::int64_t>> m(static_cast<size_t>(nrr),
                                           std::vector<std::int64_t>(static_cast<size_t>(ncc), 0));
  for (const auto& e : incidence(c, k + 1)) {
    Index rr = rmap[static_cast<size_t>(e.col)];  // coboundary = transposed incidence
    Index cc = cmap[static_cast<size_t>(e.row)];
    if (rr >= 0 && cc >= 0) m[static_cast<size_t>(rr)][static_cast<size_t>(cc)] = e.sign;
  }
  return m;
}

Index relative_count(const SimplicialComplex& c, int k) {
  Index n = 0;
  for (char b : c.is_boundary[static_cast<size_t>(k)]) n += (b == 0);
  return n;
}

std::vector<Index> betti_of(const SimplicialComplex& c, bool relative) {
  int n = c.dim;
  std::vector<Index> ranks(static_cast<size_t>(n) + 1, 0);  // rank of d_k
  for (int k = 0; k < n; ++k) ranks[static_cast<size_t>(k)] = integer_rank(coboundary_int(c, k, relative));
  std::vector<Index> b(static_cast<size_t>(n) + 1, 0);
  for (int k = 0; k <= n; ++k) {
    Index nk = relative ? relative_count(c, k) : c.count(k);
    Index rk = (k < n) ? ranks[static_cast<size_t>(k)] : 0;
    Index rkm = (k > 0) ? ranks[static_cast<size_t>(k - 1)] : 0;
    b[static_cast<size_t>(k)] = nk - rk - rkm;
  }
  return b;
}

}  // namespace

std::vector<Index> betti_absolute(const SimplicialComplex& c) { return betti_of(c, false); }
std::vector<Index> betti_relative(const SimplicialComplex& c) { return betti_of(c, true); }

BettiReport cohomology_report(const SimplicialComplex& c) {
  BettiReport rep;
  rep.absolute = betti_absolute(c);
  rep.relative = betti_relative(c);
  bool has_boundary = false;
  for (char b : c.is_boundary[0]) has_boundary |= (b != 0);
  if (has_boundary) rep.boundary = betti_absolute(boundary_complex(c).complex);

  int n = c.dim;
  rep.lefschetz_ok = true;
  for (int k = 0; k <= n; ++k)
    rep.lefschetz_ok = rep.lefschetz_ok &&
                       rep.relative[static_cast<size_t>(k)] == rep.absolute[static_cast<size_t>(n - k)];

  rep.les_alternating_sum = 0;
  for (int k = 0; k <= n; ++k) {
    std::int64_t sgn = (k % 2 == 0) ? 1 : -1;
    std::int64_t bd = (k < static_cast<int>(rep.boundary.size())) ? rep.boundary[static_cast<size_t>(k)] : 0;
    rep.les_alternating_sum +=
        sgn * (rep.relative[static_cast<size_t>(k)] - rep.absolute[static_cast<size_t>(k)] + bd);
  }
  return rep;
}

HarmonicBasis harmonic_basis(const SimplicialComplex& c, int degree, const BCKind& bc) {
  CF_REQUIRE(degree >= 0 && degree <= c.dim, "precondition: harmonic degree out of range");
  ConstrainedOperator op = build_constrained(c, degree, bc);
  ModeBasis mb = eigendecompose(op.block(degree));

  HarmonicBasis h;
  h.clip = mb.clip;
  Index nz = mb.n_zero;
  h.basis = Mat::Zero(c.count(degree), nz);
  h.kernel_eigenvalues = Vec(nz);
  Index col = 0;
  for (Index j = 0; j < mb.eigenvalues.size(); ++j) {
    if (!mb.is_zero_mode(j)) {
      // ambiguity: a nonzero eigenvalue uncomfortably close to the clip
      if (std::abs(mb.eigenvalues[j]) <= 10.0 * mb.clip) h.ambiguous = true;
      continue;
    }
    h.basis.col(col) = mb.P.transpose() * mb.modes.col(j);
    h.kernel_eigenvalues[col] = mb.eigenvalues[j];
    ++col;
  }
  return h;
}

}  // namespace cauchyform
