#include "cauchyform/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <queue>
#include <set>

#include <json.hpp>

namespace cauchyform {

namespace {

std::string tuple_str(const std::vector<Index>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// position parity sign of the face that drops the j-th vertex
inline int face_sign(int j) { return (j % 2 == 0) ? 1 : -1; }

std::vector<Index> drop_vertex(const std::vector<Index>& s, int j) {
  std::vector<Index> f;
  f.reserve(s.size() - 1);
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != j) f.push_back(s[i]);
  return f;
}

}  // namespace

Index SimplicialComplex::index_of(int k, const std::vector<Index>& s) const {
  auto it = lookup[k].find(s);
  CF_REQUIRE(it != lookup[k].end(), "invariant-violation: unknown ", k, "-simplex ",
             tuple_str(s));
  return it->second;
}

std::vector<IncidenceTriplet> incidence(const SimplicialComplex& c, int k) {
  CF_REQUIRE(k >= 1 && k <= c.dim, "precondition: incidence degree ", k, " out of range");
  std::vector<IncidenceTriplet> out;
  out.reserve(static_cast<size_t>(c.count(k)) * (k + 1));
  for (Index i = 0; i < c.count(k); ++i) {
    const auto& s = c.simp[k][i];
    for (int j = 0; j <= k; ++j)
      out.push_back({c.index_of(k - 1, drop_vertex(s, j)), i, face_sign(j)});
  }
  return out;
}

double simplex_volume(const SimplicialComplex& c, int k, Index i) {
  const auto& s = c.simp[k][i];
  if (k == 0) return 1.0;
  const Eigen::Vector3d e1 = c.vertices[s[1]] - c.vertices[s[0]];
  if (k == 1) return e1.norm();
  const Eigen::Vector3d e2 = c.vertices[s[2]] - c.vertices[s[0]];
  return 0.5 * e1.cross(e2).norm();
}

SimplicialComplex build_complex(int dim, std::vector<Eigen::Vector3d> vertices,
                                const std::vector<std::vector<Index>>& top,
                                bool require_connected) {
  CF_REQUIRE(dim >= 0 && dim <= 2, "invariant-violation: dimension ", dim, " unsupported");
  SimplicialComplex c;
  c.dim = dim;
  c.vertices = std::move(vertices);
  const Index nv = static_cast<Index>(c.vertices.size());

  // collect simplices of all degrees as sorted tuples, lexicographically ordered
  std::array<std::set<std::vector<Index>>, 3> sets;
  for (const auto& t : top) {
    CF_REQUIRE(static_cast<int>(t.size()) == dim + 1,
               "parse-error: top simplex ", tuple_str(t), " has wrong vertex count");
    std::vector<Index> s = t;
    std::sort(s.begin(), s.end());
    CF_REQUIRE(std::adjacent_find(s.begin(), s.end()) == s.end(),
               "invariant-violation: simplex ", tuple_str(t), " repeats a vertex");
    CF_REQUIRE(s.front() >= 0 && s.back() < nv,
               "invariant-violation: simplex ", tuple_str(t), " references a missing vertex");
    CF_REQUIRE(!sets[dim].count(s), "invariant-violation: duplicate top simplex ", tuple_str(s));
    sets[dim].insert(s);
  }
  for (int k = dim; k >= 1; --k)
    for (const auto& s : sets[k])
      for (int j = 0; j <= k; ++j) sets[k - 1].insert(drop_vertex(s, j));
  for (Index v = 0; v < nv; ++v) sets[0].insert({v});

  for (int k = 0; k <= dim; ++k) {
    c.simp[k].assign(sets[k].begin(), sets[k].end());
    for (Index i = 0; i < c.count(k); ++i) c.lookup[k][c.simp[k][i]] = i;
    c.is_boundary[k].assign(c.simp[k].size(), 0);
  }

  if (dim == 0) return c;

  // coface counts of (n-1)-simplices determine the boundary
  std::vector<std::vector<std::pair<Index, int>>> cofaces(c.count(dim - 1));
  for (Index i = 0; i < c.count(dim); ++i) {
    const auto& s = c.simp[dim][i];
    for (int j = 0; j <= dim; ++j)
      cofaces[c.index_of(dim - 1, drop_vertex(s, j))].push_back({i, face_sign(j)});
  }
  for (Index f = 0; f < c.count(dim - 1); ++f) {
    const size_t n = cofaces[f].size();
    CF_REQUIRE(n == 1 || n == 2, "invariant-violation: simplex ", tuple_str(c.simp[dim - 1][f]),
               " has ", n, " cofaces");
    if (n == 1) c.is_boundary[dim - 1][f] = 1;
  }
  // downward closure of the boundary flags
  for (int k = dim - 1; k >= 1; --k)
    for (Index i = 0; i < c.count(k); ++i)
      if (c.is_boundary[k][i])
        for (int j = 0; j <= k; ++j)
          c.is_boundary[k - 1][c.index_of(k - 1, drop_vertex(c.simp[k][i], j))] = 1;

  // coherent orientation by propagation across interior faces
  c.orientation.assign(c.count(dim), 0);
  for (Index seed = 0; seed < c.count(dim); ++seed) {
    if (c.orientation[seed] != 0) continue;
    c.orientation[seed] = 1;
    std::queue<Index> bfs;
    bfs.push(seed);
    while (!bfs.empty()) {
      const Index t = bfs.front();
      bfs.pop();
      const auto& s = c.simp[dim][t];
      for (int j = 0; j <= dim; ++j) {
        const Index f = c.index_of(dim - 1, drop_vertex(s, j));
        for (const auto& [t2, sign2] : cofaces[f]) {
          if (t2 == t) continue;
          const int needed = -c.orientation[t] * face_sign(j) * sign2;
          if (c.orientation[t2] == 0) {
            c.orientation[t2] = needed;
            bfs.push(t2);
          } else {
            CF_REQUIRE(c.orientation[t2] == needed,
                       "invariant-violation: complex is not orientable across simplex ",
                       tuple_str(c.simp[dim - 1][f]));
          }
        }
      }
    }
  }
  // deterministic global sign: planar 2-D meshes are counterclockwise in the plane
  if (dim == 2) {
    bool planar = true;
    for (const auto& v : c.vertices) planar = planar && std::abs(v.z()) < 1e-14;
    if (planar) {
      const auto& s = c.simp[2][0];
      const Eigen::Vector3d e1 = c.vertices[s[1]] - c.vertices[s[0]];
      const Eigen::Vector3d e2 = c.vertices[s[2]] - c.vertices[s[0]];
      if (c.orientation[0] * e1.cross(e2).z() < 0)
        for (auto& o : c.orientation) o = -o;
    }
  }

  validate(c, require_connected);
  return c;
}

void validate(const SimplicialComplex& c, bool require_connected) {
  if (c.dim == 0) return;
  for (Index i = 0; i < c.count(c.dim); ++i)
    CF_REQUIRE(simplex_volume(c, c.dim, i) > 1e-14, "invariant-violation: degenerate simplex ",
               tuple_str(c.simp[c.dim][i]));

  // coface counts and coherence of induced orientations on interior faces
  std::vector<std::vector<std::pair<Index, int>>> cofaces(c.count(c.dim - 1));
  for (Index i = 0; i < c.count(c.dim); ++i)
    for (int j = 0; j <= c.dim; ++j)
      cofaces[c.index_of(c.dim - 1, drop_vertex(c.simp[c.dim][i], j))].push_back(
          {i, face_sign(j) * c.orientation[i]});
  for (Index f = 0; f < c.count(c.dim - 1); ++f) {
    const auto& cf = cofaces[f];
    CF_REQUIRE(cf.size() == 1 || cf.size() == 2, "invariant-violation: simplex ",
               tuple_str(c.simp[c.dim - 1][f]), " has ", cf.size(), " cofaces");
    CF_REQUIRE((cf.size() == 1) == (c.is_boundary[c.dim - 1][f] != 0),
               "invariant-violation: inconsistent boundary flag on ",
               tuple_str(c.simp[c.dim - 1][f]));
    if (cf.size() == 2)
      CF_REQUIRE(cf[0].second + cf[1].second == 0,
                 "invariant-violation: incoherent orientation across ",
                 tuple_str(c.simp[c.dim - 1][f]));
  }

  // the boundary is a closed (n-1)-complex: in 2-D every boundary vertex lies in
  // exactly two boundary edges (cycles); in 1-D points are already closed
  if (c.dim == 2) {
    std::vector<int> bcount(c.count(0), 0);
    for (Index e = 0; e < c.count(1); ++e)
      if (c.is_boundary[1][e])
        for (Index v : c.simp[1][e]) bcount[v]++;
    for (Index v = 0; v < c.count(0); ++v)
      if (c.is_boundary[0][v])
        CF_REQUIRE(bcount[v] == 2, "invariant-violation: boundary not closed at vertex [",
                   v, "]");
  }

  if (require_connected) {
    std::vector<Index> parent(c.count(0));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<Index(Index)> find = [&](Index x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : c.simp[1]) parent[find(e[0])] = find(e[1]);
    for (Index v = 1; v < c.count(0); ++v)
      CF_REQUIRE(find(v) == find(0), "invariant-violation: complex is disconnected");
  }
}

namespace {

SimplicialComplex ring_mesh(double r0, double r1, int n_theta, int n_r,
                            bool cylinder, double height) {
  CF_REQUIRE(n_theta >= 3 && n_r >= 1, "precondition: ring mesh needs n_theta >= 3, n_r >= 1");
  std::vector<Eigen::Vector3d> verts;
  std::vector<std::vector<Index>> top;
  const int rings = n_r + 1;
  // Alternate rings are rotated by half an angular step so that every band is
  // triangulated with near-isosceles triangles instead of one-sided diagonal
  // splits; this keeps Whitney mass row sums positive at much wider aspect
  // ratios.
  auto off = [&](int ring) { return 0.5 * (ring % 2); };
  auto vid = [&](int ring, int j) -> Index {
    return static_cast<Index>(ring) * n_theta + (j % n_theta);
  };
  for (int i = 0; i < rings; ++i) {
    const double r = r0 + (r1 - r0) * i / n_r;
    for (int j = 0; j < n_theta; ++j) {
      const double th = 2.0 * M_PI * (j + off(i)) / n_theta;
      if (cylinder)
        verts.push_back({r0 * std::cos(th), r0 * std::sin(th), height * i / n_r});
      else
        verts.push_back({r * std::cos(th), r * std::sin(th), 0});
    }
  }
  for (int i = 0; i + 1 < rings; ++i)
    for (int j = 0; j < n_theta; ++j) {
      if (off(i + 1) > off(i)) {
        // upper vertex j sits over the gap between lower j and j+1
        top.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j)});
        top.push_back({vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)});
      } else {
        // lower vertex j+1 sits under the gap between upper j and j+1
        top.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)});
        top.push_back({vid(i, j), vid(i + 1, j + 1), vid(i + 1, j)});
      }
    }
  return build_complex(2, std::move(verts), top);
}

SimplicialComplex disk_mesh(double radius, int n_theta, int n_r) {
  CF_REQUIRE(n_theta >= 3 && n_r >= 1, "precondition: disk needs n_theta >= 3, n_r >= 1");
  // A single-vertex fan subtends 2π/m at the center, and Whitney edge-mass
  // row sums go nonpositive once that wedge angle drops below ~33°.  The rim
  // keeps exactly n_theta edges; going inward, the angular count halves at the
  // innermost bands until the center fan has at most 10 spokes.  Halving at
  // small radius keeps the arc/radial aspect near 1 through every transition.
  int halvings = 0, fan = n_theta;
  while (fan > 10 && fan % 2 == 0) {
    ++halvings;
    fan /= 2;
  }
  CF_REQUIRE(fan <= 10, "precondition: disk center fan would need ", fan,
             " spokes, which collapses the edge metric; choose n_theta at most 10 or with "
             "enough factors of two (12, 16, 20, 24, ...) to halve down to 10 or fewer");
  CF_REQUIRE(n_r > halvings, "precondition: disk needs n_r > ", halvings,
             " rings so the angular count can reach the rim value ", n_theta,
             " from a ", fan, "-spoke center fan");

  std::vector<int> count(static_cast<size_t>(n_r));
  for (int i = 0; i < n_r; ++i)
    count[static_cast<size_t>(i)] = n_theta >> std::max(0, halvings - i);

  // Per-ring angular offsets, in units of that ring's own step: the rim sits at
  // the standard angles; uniform bands alternate by half a step (near-isosceles
  // splits); transition bands align each coarse vertex with every other fine
  // vertex.
  std::vector<double> off(static_cast<size_t>(n_r), 0.0);
  for (int i = n_r - 2; i >= 0; --i) {
    const double outer = off[static_cast<size_t>(i + 1)];
    if (count[static_cast<size_t>(i)] == count[static_cast<size_t>(i + 1)])
      off[static_cast<size_t>(i)] = outer == 0.0 ? 0.5 : outer - 0.5;
    else
      off[static_cast<size_t>(i)] = outer / 2.0;
  }

  std::vector<Eigen::Vector3d> verts;
  std::vector<std::vector<Index>> top;
  std::vector<Index> base(static_cast<size_t>(n_r));
  verts.push_back({0, 0, 0});
  for (int i = 0; i < n_r; ++i) {
    base[static_cast<size_t>(i)] = static_cast<Index>(verts.size());
    const double r = radius * (i + 1) / n_r;
    const int m = count[static_cast<size_t>(i)];
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * M_PI * (j + off[static_cast<size_t>(i)]) / m;
      verts.push_back({r * std::cos(th), r * std::sin(th), 0});
    }
  }
  auto vid = [&](int ring, int j) -> Index {
    const int m = count[static_cast<size_t>(ring)];
    return base[static_cast<size_t>(ring)] + ((j % m) + m) % m;
  };

  for (int j = 0; j < count[0]; ++j) top.push_back({0, vid(0, j), vid(0, j + 1)});
  for (int i = 0; i + 1 < n_r; ++i) {
    const int m = count[static_cast<size_t>(i)];
    if (m == count[static_cast<size_t>(i + 1)]) {
      for (int j = 0; j < m; ++j) {
        if (off[static_cast<size_t>(i + 1)] > off[static_cast<size_t>(i)]) {
          top.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j)});
          top.push_back({vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)});
        } else {
          top.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)});
          top.push_back({vid(i, j), vid(i + 1, j + 1), vid(i + 1, j)});
        }
      }
    } else {
      // 1-to-2 transition: inner vertex j sits under fine vertex 2j
      for (int j = 0; j < m; ++j) {
        top.push_back({vid(i, j), vid(i + 1, 2 * j), vid(i + 1, 2 * j + 1)});
        top.push_back({vid(i, j), vid(i + 1, 2 * j + 1), vid(i, j + 1)});
        top.push_back({vid(i + 1, 2 * j + 1), vid(i + 1, 2 * j + 2), vid(i, j + 1)});
      }
    }
  }
  return build_complex(2, std::move(verts), top);
}

}  // namespace

SimplicialComplex generate(const MeshGeneratorSpec& spec) {
  if (spec.family == "interval") {
    const double x0 = spec.get("x0", 0.0);
    const double x1 = spec.get("x1", M_PI);
    const int n = static_cast<int>(spec.get("segments", 16));
    CF_REQUIRE(n >= 2 && x1 > x0, "precondition: interval needs segments >= 2 and x1 > x0");
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::vector<Index>> top;
    for (int i = 0; i <= n; ++i) verts.push_back({x0 + (x1 - x0) * i / n, 0, 0});
    for (Index i = 0; i < n; ++i) top.push_back({i, i + 1});
    return build_complex(1, std::move(verts), top);
  }
  if (spec.family == "rectangle") {
    const double lx = spec.get("lx", 1.0), ly = spec.get("ly", 1.0);
    const int nx = static_cast<int>(spec.get("nx", 8));
    const int ny = static_cast<int>(spec.get("ny", 8));
    CF_REQUIRE(nx >= 1 && ny >= 1, "precondition: rectangle needs nx, ny >= 1");
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::vector<Index>> top;
    auto vid = [&](int i, int j) { return static_cast<Index>(j) * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) verts.push_back({lx * i / nx, ly * j / ny, 0});
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        top.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
        top.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      }
    return build_complex(2, std::move(verts), top);
  }
  if (spec.family == "disk")
    return disk_mesh(spec.get("radius", 1.0), static_cast<int>(spec.get("n_theta", 24)),
                     static_cast<int>(spec.get("n_r", 4)));
  if (spec.family == "annulus")
    return ring_mesh(spec.get("r0", 1.0), spec.get("r1", 2.0),
                     static_cast<int>(spec.get("n_theta", 24)),
                     static_cast<int>(spec.get("n_r", 4)), false, 0.0);
  if (spec.family == "cylinder_strip")
    return ring_mesh(spec.get("radius", 1.0), spec.get("radius", 1.0),
                     static_cast<int>(spec.get("n_theta", 24)),
                     static_cast<int>(spec.get("n_z", 4)), true, spec.get("height", 1.0));
  throw Error(detail::concat("parse-error: unknown mesh family '", spec.family, "'"));
}

SimplicialComplex refine(const SimplicialComplex& c) {
  CF_REQUIRE(c.dim >= 1, "precondition: refine needs dim >= 1");
  std::vector<Eigen::Vector3d> verts = c.vertices;
  const Index nv = static_cast<Index>(verts.size());
  // one new vertex per edge, at the midpoint
  for (Index e = 0; e < c.count(1); ++e)
    verts.push_back(0.5 * (c.vertices[c.simp[1][e][0]] + c.vertices[c.simp[1][e][1]]));
  auto mid = [&](Index a, Index b) {
    return nv + c.index_of(1, {std::min(a, b), std::max(a, b)});
  };
  std::vector<std::vector<Index>> top;
  if (c.dim == 1) {
    for (Index e = 0; e < c.count(1); ++e) {
      const auto& s = c.simp[1][e];
      top.push_back({s[0], mid(s[0], s[1])});
      top.push_back({mid(s[0], s[1]), s[1]});
    }
  } else {
    for (Index t = 0; t < c.count(2); ++t) {
      const auto& s = c.simp[2][t];
      const Index mab = mid(s[0], s[1]), mac = mid(s[0], s[2]), mbc = mid(s[1], s[2]);
      top.push_back({s[0], mab, mac});
      top.push_back({s[1], mab, mbc});
      top.push_back({s[2], mac, mbc});
      top.push_back({mab, mac, mbc});
    }
  }
  return build_complex(c.dim, std::move(verts), top);
}

std::string mesh_to_json_text(const SimplicialComplex& c) {
  nlohmann::ordered_json j;
  j["format"] = "cauchyform-mesh-v1";
  j["dimension"] = c.dim;
  bool planar = true;
  for (const auto& v : c.vertices) planar = planar && std::abs(v.z()) < 1e-300;
  auto& jv = j["vertices"] = nlohmann::ordered_json::array();
  for (const auto& v : c.vertices) {
    if (planar)
      jv.push_back({v.x(), v.y()});
    else
      jv.push_back({v.x(), v.y(), v.z()});
  }
  auto& js = j["simplices"] = nlohmann::ordered_json::array();
  for (const auto& s : c.simp[c.dim]) js.push_back(s);
  // advisory only: recomputed from coface counts on load
  auto& jb = j["boundary"] = nlohmann::ordered_json::array();
  if (c.dim >= 1)
    for (Index f = 0; f < c.count(c.dim - 1); ++f)
      if (c.is_boundary[c.dim - 1][f]) jb.push_back(c.simp[c.dim - 1][f]);
  return j.dump(1);
}

SimplicialComplex mesh_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(detail::concat("parse-error: ", e.what()));
  }
  CF_REQUIRE(j.is_object() && j.value("format", "") == "cauchyform-mesh-v1",
             "parse-error: missing or wrong format tag (want cauchyform-mesh-v1)");
  CF_REQUIRE(j.contains("dimension") && j["dimension"].is_number_integer(),
             "parse-error: missing integer 'dimension'");
  const int dim = j["dimension"].get<int>();
  CF_REQUIRE(dim == 1 || dim == 2, "parse-error: dimension must be 1 or 2");
  CF_REQUIRE(j.contains("vertices") && j["vertices"].is_array(),
             "parse-error: missing 'vertices' array");
  CF_REQUIRE(j.contains("simplices") && j["simplices"].is_array(),
             "parse-error: missing 'simplices' array");
  std::vector<Eigen::Vector3d> verts;
  for (const auto& v : j["vertices"]) {
    CF_REQUIRE(v.is_array() && (v.size() == 2 || v.size() == 3) && v[0].is_number(),
               "parse-error: vertex entries must be [x,y] or [x,y,z]");
    verts.push_back({v[0].get<double>(), v[1].get<double>(),
                     v.size() == 3 ? v[2].get<double>() : 0.0});
  }
  std::vector<std::vector<Index>> top;
  for (const auto& s : j["simplices"]) {
    CF_REQUIRE(s.is_array() && static_cast<int>(s.size()) == dim + 1,
               "parse-error: each simplex needs ", dim + 1, " vertex ids");
    std::vector<Index> t;
    for (const auto& v : s) {
      CF_REQUIRE(v.is_number_integer(), "parse-error: simplex vertex ids must be integers");
      t.push_back(v.get<Index>());
    }
    top.push_back(std::move(t));
  }
  return build_complex(dim, std::move(verts), top);
}

void save_mesh(const SimplicialComplex& c, const std::string& path) {
  std::ofstream out(path);
  CF_REQUIRE(out.good(), "io-error: cannot open ", path, " for writing");
  out << mesh_to_json_text(c) << "\n";
}

SimplicialComplex load_mesh(const std::string& path) {
  std::ifstream in(path);
  CF_REQUIRE(in.good(), "io-error: cannot open ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return mesh_from_json_text(buf.str());
}

BoundaryComplex boundary_complex(const SimplicialComplex& c) {
  CF_REQUIRE(c.dim >= 1, "precondition: boundary complex needs dim >= 1");
  BoundaryComplex out;
  std::vector<Index> vmap(c.count(0), -1);
  std::vector<Eigen::Vector3d> verts;
  std::vector<Index> vparent;
  for (Index v = 0; v < c.count(0); ++v)
    if (c.is_boundary[0][v]) {
      vmap[v] = static_cast<Index>(verts.size());
      verts.push_back(c.vertices[v]);
      vparent.push_back(v);
    }
  std::vector<std::vector<Index>> top;
  for (Index f = 0; f < c.count(c.dim - 1); ++f)
    if (c.is_boundary[c.dim - 1][f]) {
      std::vector<Index> s;
      for (Index v : c.simp[c.dim - 1][f]) s.push_back(vmap[v]);
      top.push_back(std::move(s));
    }
  out.complex = build_complex(c.dim - 1, std::move(verts), top, /*require_connected=*/false);
  // map boundary simplices of every degree back to parent indices
  for (int k = 0; k <= c.dim - 1; ++k) {
    out.parent[k].resize(out.complex.count(k));
    for (Index i = 0; i < out.complex.count(k); ++i) {
      std::vector<Index> s;
      for (Index v : out.complex.simp[k][i]) s.push_back(vparent[v]);
      std::sort(s.begin(), s.end());
      out.parent[k][i] = c.index_of(k, s);
    }
  }
  return out;
}

}  // namespace cauchyform
