#ifndef CAUCHYFORM_MESH_HPP
#define CAUCHYFORM_MESH_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cauchyform/common.hpp"

namespace cauchyform {

// Oriented simplicial complex with boundary, dimension n ∈ {1, 2}, embedded in R^3
// (planar meshes use z = 0; the cylinder strip is a genuine polyhedral cylinder).
// Simplices of every degree are stored as ascending vertex tuples in lexicographic
// order, so indices are canonical for a given vertex numbering. The reference
// orientation of each simplex is the ascending tuple; `orientation` records the
// coherent global orientation of top simplices relative to that reference.
struct SimplicialComplex {
  int dim = 0;
  std::vector<Eigen::Vector3d> vertices;
  std::array<std::vector<std::vector<Index>>, 3> simp;  // simp[k][i] -> sorted vertex ids
  std::array<std::vector<char>, 3> is_boundary;         // simplex contained in ∂Σ
  std::array<std::map<std::vector<Index>, Index>, 3> lookup;
  std::vector<int> orientation;  // per top simplex, ±1

  Index count(int k) const {
    return (k < 0 || k > dim) ? 0 : static_cast<Index>(simp[k].size());
  }
  Index index_of(int k, const std::vector<Index>& s) const;
};

// Signed incidence triplets of ∂_k: C_k -> C_{k-1}; entry (face, simplex) = (-1)^j for
// the face dropping the j-th vertex of the ascending tuple. The coboundary d_{k-1} is
// the transpose. Integer-exact by construction.
struct IncidenceTriplet {
  Index row, col;
  int sign;
};
std::vector<IncidenceTriplet> incidence(const SimplicialComplex& c, int k);

double simplex_volume(const SimplicialComplex& c, int k, Index i);

// Builds the full complex (all face degrees, boundary flags, coherent orientation)
// from top-dimensional simplices, then validates invariants.
SimplicialComplex build_complex(int dim, std::vector<Eigen::Vector3d> vertices,
                                const std::vector<std::vector<Index>>& top,
                                bool require_connected = true);

// Throws Error("invariant-violation: ...") naming the offending simplex.
void validate(const SimplicialComplex& c, bool require_connected = true);

struct MeshGeneratorSpec {
  std::string family;  // interval | rectangle | disk | annulus | cylinder_strip
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

SimplicialComplex generate(const MeshGeneratorSpec& spec);
SimplicialComplex refine(const SimplicialComplex& c);

// JSON mesh files, schema "cauchyform-mesh-v1": dimension, vertex coordinates and
// top-dimensional simplices only; boundary is recomputed from coface counts on load.
void save_mesh(const SimplicialComplex& c, const std::string& path);
SimplicialComplex load_mesh(const std::string& path);
SimplicialComplex mesh_from_json_text(const std::string& text);
std::string mesh_to_json_text(const SimplicialComplex& c);

// Boundary (n-1)-complex with maps back to parent simplex indices per degree.
struct BoundaryComplex {
  SimplicialComplex complex;
  std::array<std::vector<Index>, 3> parent;  // parent[k][i] = simplex index in parent
};
BoundaryComplex boundary_complex(const SimplicialComplex& c);

}  // namespace cauchyform

#endif
