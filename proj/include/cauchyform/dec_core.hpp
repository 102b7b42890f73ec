#ifndef CAUCHYFORM_DEC_CORE_HPP
#define CAUCHYFORM_DEC_CORE_HPP

#include <functional>
#include <string>

#include "cauchyform/mesh.hpp"

namespace cauchyform {

// Two mass families are deliberate. The consistent Whitney (Galerkin) mass is the
// canonical Riemannian pairing used by the Stokes/trace layer; the row-sum lumped
// (diagonal) family is used inside constrained wave operators, where it reproduces
// the classical finite-difference spectra exactly and keeps mass inverses local.
enum class MassFamily { consistent, lumped };

// Coboundary d_k: signed transpose-incidence, entries in {-1, 0, +1}.
SpMat exterior_derivative(const SimplicialComplex& c, int k);

// Consistent Galerkin mass of lowest-order Whitney k-forms; SPD.
SpMat mass_matrix(const SimplicialComplex& c, int k);

// Row sums of the consistent mass (diagonal entries; checked positive).
Vec lumped_mass(const SimplicialComplex& c, int k);

// δ_k = M_{k-1}^{-1} d_{k-1}^T M_k (mass-adjoint, no boundary correction).
Mat codifferential(const SimplicialComplex& c, int k,
                   MassFamily family = MassFamily::consistent);

// L_k = d_{k-1} δ_k + δ_{k+1} d_k, with missing terms dropped at k = 0 and k = n.
Mat hodge_laplacian(const SimplicialComplex& c, int k,
                    MassFamily family = MassFamily::consistent);

// de Rham maps: coefficient per simplex = integral of the sampled form over it
// (3-point Gauss on edges, centroid rule on top simplices, evaluation at vertices).
Vec interpolate_scalar(const SimplicialComplex& c,
                       const std::function<double(const Eigen::Vector3d&)>& f);
Vec interpolate_oneform(const SimplicialComplex& c,
                        const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f);
Vec interpolate_density(const SimplicialComplex& c,
                        const std::function<double(const Eigen::Vector3d&)>& f);

// Coordinate-list text export for external verification.
void export_coo(const SpMat& m, const std::string& path);

}  // namespace cauchyform

#endif
