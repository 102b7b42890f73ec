#ifndef CAUCHYFORM_RUNNER_HPP
#define CAUCHYFORM_RUNNER_HPP

#include "cauchyform/algebra.hpp"
#include "cauchyform/cohomology.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cauchyform {

// One experiment: mesh source, degree, boundary condition, time span, seed.
// A fixed config (and seed) produces byte-identical reports.
struct RunConfig {
  MeshGeneratorSpec mesh_spec;  // used when mesh_file is empty
  std::string mesh_file;
  int degree = 1;
  BCTag bc_tag = BCTag::MaxwellNormal;
  double robin_f = 0.0;  // broadcast over boundary top-simplices for Robin tags
  double t0 = 0.0;
  double t1 = 6.0;
  int samples = 33;
  Index mode_budget = 0;  // cap on reported spectrum rows; 0 = all
  std::string experiment = "run";
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int refine = 0;             // extra uniform refinements of the mesh
  std::string source_file;    // propagate input
  std::string potential_file; // gaugefix input
};

// Throws Error("parse-error: ...") on malformed configs.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Stable serialization used for the embedded config hash.
std::string canonical_config(const RunConfig& cfg);
std::uint64_t fnv1a_hash(const std::string& s);

SimplicialComplex config_mesh(const RunConfig& cfg);
BCKind config_bc(const RunConfig& cfg, const SimplicialComplex& c);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

VerifyReport run_verify(const RunConfig& cfg);

// Separable-form text files, schema cauchyform-form-v1: a `degree,<k>` line,
// an optional `bc,<tag>` line, then one term per row
//   <block s|t>,<profile>,<p0>,<p1>,<p2>,<c0>,<c1>,...
// with profiles bump(t0,t1,m), constant(v), ramp(t0,t1), sinusoid(omega,phase).
SpacetimeForm load_form(const GaugeTheory& th, const std::string& path,
                        int expected_degree);
void save_form_samples(const GaugeTheory& th, const SpacetimeForm& f,
                       double t0, double t1, int samples, const std::string& path);

// Commands: mesh, spectrum, verify, propagate, gaugefix, cohomology,
// symplectic, radical.  Each writes JSON/CSV into cfg.out_dir and returns the
// process exit code (0 success, 1 failed checks).  Configuration errors throw.
int run_command(const std::string& command, const RunConfig& cfg);

}  // namespace cauchyform

#endif
