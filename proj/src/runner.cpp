#include "cauchyform/runner.hpp"

#include "cauchyform/boundary.hpp"
#include "cauchyform/dec_core.hpp"
#include "cauchyform/propagator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace cauchyform {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using timecalc::PiecewiseTrig;

namespace {

constexpr double kTiny = 1e-300;

std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool tangential_family(BCTag t) {
  return t == BCTag::Dirichlet || t == BCTag::BoxTangential ||
         t == BCTag::RobinTangential || t == BCTag::MaxwellTangential;
}

bool gauge_family(BCTag t) {
  return t == BCTag::BoxTangential || t == BCTag::BoxNormal ||
         t == BCTag::MaxwellTangential || t == BCTag::MaxwellNormal;
}

double to_num(const std::string& s, Index lineno) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    CF_REQUIRE(used == s.size(), "parse-error: trailing characters in number '", s,
               "' at line ", lineno);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    CF_REQUIRE(false, "parse-error: expected a number, got '", s, "' at line ", lineno);
  }
  return 0.0;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  CF_REQUIRE(out.good(), "io-error: cannot open ", path, " for writing");
  out << content;
  out.flush();
  CF_REQUIRE(out.good(), "io-error: failed writing ", path);
}

void ensure_outdir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  CF_REQUIRE(!ec, "io-error: cannot create output directory ", cfg.out_dir);
}

std::string opath(const RunConfig& cfg, const std::string& suffix) {
  return cfg.out_dir + "/" + cfg.experiment + "-" + suffix;
}

ordered_json report_header(const RunConfig& cfg, const std::string& command) {
  ordered_json r;
  r["schema"] = "cauchyform-report-v1";
  r["command"] = command;
  r["experiment"] = cfg.experiment;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(canonical_config(cfg))));
  r["config_hash"] = buf;
  r["seed"] = cfg.seed;
  return r;
}

PiecewiseTrig parse_profile(const std::string& name, double p0, double p1, double p2,
                            Index lineno) {
  if (name == "bump") {
    int m = static_cast<int>(std::lround(p2));
    CF_REQUIRE(m >= 1 && m <= 16, "parse-error: bump exponent out of range at line ",
               lineno);
    return timecalc::sin_power_bump(p0, p1, m);
  }
  if (name == "constant") return PiecewiseTrig::constant(p0);
  if (name == "ramp") return timecalc::smoothstep(p0, p1);
  if (name == "sinusoid") return timecalc::sinusoid(p0, p1);
  CF_REQUIRE(false, "parse-error: unknown profile '", name, "' at line ", lineno);
  return PiecewiseTrig::zero();
}

bool form_time_compact(const SpacetimeForm& f) {
  for (const SeparableTerm& p : f.tpart.parts)
    if (!p.profile.compact_support()) return false;
  for (const SeparableTerm& p : f.spart.parts)
    if (!p.profile.compact_support()) return false;
  return true;
}

void write_spectrum_csv(const GaugeTheory& th, const RunConfig& cfg,
                        const std::string& path) {
  std::ostringstream os;
  os << "degree,mode,eigenvalue,frequency,zero_mode\n";
  for (int j = 0; j <= th.dim(); ++j) {
    const ModeBasis& b = th.basis(j);
    Index cap = b.eigenvalues.size();
    if (cfg.mode_budget > 0) cap = std::min(cap, cfg.mode_budget);
    for (Index i = 0; i < cap; ++i) {
      double ev = b.eigenvalues[i];
      os << j << ',' << i << ',' << fmt_g(ev) << ','
         << fmt_g(std::sqrt(std::max(0.0, ev))) << ','
         << (b.is_zero_mode(i) ? 1 : 0) << '\n';
    }
  }
  write_text(path, os.str());
}

void write_pairing_csv(const PairingMatrix& pm, const std::string& path) {
  std::ostringstream os;
  os << "label";
  for (const std::string& l : pm.labels) os << ',' << l;
  os << '\n';
  for (Index i = 0; i < pm.w.rows(); ++i) {
    os << pm.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < pm.w.cols(); ++j) os << ',' << fmt_g(pm.w(i, j));
    os << '\n';
  }
  write_text(path, os.str());
}

// Random compact separable form, unit lumped norm per part.
SpacetimeForm random_compact_form(const GaugeTheory& th, int degree,
                                  std::mt19937_64& rng, double t0, double t1,
                                  bool with_tpart) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto window = [&]() {
    double len = (t1 - t0) * (0.25 + 0.25 * u01(rng));
    double start = t0 + (t1 - t0 - len) * u01(rng);
    return timecalc::sin_power_bump(start, start + len, 4);
  };
  auto rand_kept = [&](int j) {
    Vec v(th.block(j).Mlump.size());
    for (Index i = 0; i < v.size(); ++i) v[i] = coef(rng);
    double nn = th.block_norm(j, v);
    if (nn > 0) v /= nn;
    return v;
  };
  std::vector<SeparableTerm> tparts, sparts;
  sparts.push_back({rand_kept(degree), window()});
  if (with_tpart && degree >= 1) tparts.push_back({rand_kept(degree - 1), window()});
  return separable_form(th, degree, tparts, sparts);
}

double rel_err(double lhs, double rhs) {
  double den = std::max({std::abs(lhs), std::abs(rhs), kTiny});
  return std::abs(lhs - rhs) / den;
}

}  // namespace

// -------------------------------------------------------------------- config

RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    CF_REQUIRE(false, "parse-error: config is not valid JSON: ", e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("experiment")) cfg.experiment = j.at("experiment").get<std::string>();
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      if (m.contains("file")) cfg.mesh_file = m.at("file").get<std::string>();
      if (m.contains("family")) cfg.mesh_spec.family = m.at("family").get<std::string>();
      if (m.contains("params"))
        for (const auto& [key, val] : m.at("params").items())
          cfg.mesh_spec.params[key] = val.get<double>();
    }
    if (j.contains("degree")) cfg.degree = j.at("degree").get<int>();
    if (j.contains("bc")) {
      const auto& b = j.at("bc");
      cfg.bc_tag = parse_bc_tag(b.at("tag").get<std::string>());
      if (b.contains("f")) cfg.robin_f = b.at("f").get<double>();
    }
    if (j.contains("time")) {
      const auto& t = j.at("time");
      if (t.contains("t0")) cfg.t0 = t.at("t0").get<double>();
      if (t.contains("t1")) cfg.t1 = t.at("t1").get<double>();
      if (t.contains("samples")) cfg.samples = t.at("samples").get<int>();
    }
    if (j.contains("mode_budget")) cfg.mode_budget = j.at("mode_budget").get<Index>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("refine")) cfg.refine = j.at("refine").get<int>();
    if (j.contains("source")) cfg.source_file = j.at("source").get<std::string>();
    if (j.contains("potential")) cfg.potential_file = j.at("potential").get<std::string>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    CF_REQUIRE(false, "parse-error: bad config field: ", e.what());
  }
  CF_REQUIRE(!cfg.mesh_file.empty() || !cfg.mesh_spec.family.empty(),
             "parse-error: config needs mesh.family or mesh.file");
  CF_REQUIRE(cfg.t1 > cfg.t0, "parse-error: config time span is empty");
  CF_REQUIRE(cfg.samples >= 3, "parse-error: config needs at least 3 time samples");
  CF_REQUIRE(cfg.degree >= 0 && cfg.degree <= 2, "parse-error: config degree out of range");
  CF_REQUIRE(cfg.refine >= 0 && cfg.refine <= 6, "parse-error: config refine out of range");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CF_REQUIRE(in.good(), "io-error: cannot open config file ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_config(const RunConfig& cfg) {
  // out_dir deliberately excluded: the same experiment written to two
  // directories must produce byte-identical reports.
  std::ostringstream os;
  os << "experiment=" << cfg.experiment << ";mesh_file=" << cfg.mesh_file
     << ";family=" << cfg.mesh_spec.family << ";params=";
  for (const auto& [k, v] : cfg.mesh_spec.params) os << k << ':' << fmt_g(v) << ',';
  os << ";degree=" << cfg.degree << ";bc=" << bc_tag_name(cfg.bc_tag)
     << ";f=" << fmt_g(cfg.robin_f) << ";t0=" << fmt_g(cfg.t0)
     << ";t1=" << fmt_g(cfg.t1) << ";samples=" << cfg.samples
     << ";mode_budget=" << cfg.mode_budget << ";seed=" << cfg.seed
     << ";refine=" << cfg.refine << ";source=" << cfg.source_file
     << ";potential=" << cfg.potential_file;
  return os.str();
}

std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

SimplicialComplex config_mesh(const RunConfig& cfg) {
  SimplicialComplex c =
      cfg.mesh_file.empty() ? generate(cfg.mesh_spec) : load_mesh(cfg.mesh_file);
  for (int r = 0; r < cfg.refine; ++r) c = refine(c);
  CF_REQUIRE(cfg.degree <= c.dim,
             "precondition: configured degree exceeds the mesh dimension");
  return c;
}

BCKind config_bc(const RunConfig& cfg, const SimplicialComplex& c) {
  BCKind bc;
  bc.tag = cfg.bc_tag;
  if (bc.tag == BCTag::RobinTangential || bc.tag == BCTag::RobinNormal) {
    Index nb = 0;
    for (char flag : c.is_boundary[c.dim - 1]) nb += flag ? 1 : 0;
    bc.f = Vec::Constant(nb, cfg.robin_f);
  }
  bc.validate(c);
  return bc;
}

// ----------------------------------------------------------------- form files

SpacetimeForm load_form(const GaugeTheory& th, const std::string& path,
                        int expected_degree) {
  std::ifstream in(path, std::ios::binary);
  CF_REQUIRE(in.good(), "io-error: cannot open form file ", path);
  std::string line;
  int degree = -1;
  std::vector<SeparableTerm> tparts, sparts;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> tok = split_csv(line);
    if (tok[0] == "degree") {
      CF_REQUIRE(tok.size() >= 2, "parse-error: bare degree line at line ", lineno);
      degree = static_cast<int>(to_num(tok[1], lineno));
      continue;
    }
    if (tok[0] == "bc") {
      CF_REQUIRE(tok.size() >= 2, "parse-error: bare bc line at line ", lineno);
      BCTag t = parse_bc_tag(tok[1]);
      CF_REQUIRE(t == th.tag(), "parse-error: form file declares boundary condition '",
                 bc_tag_name(t), "' but the run uses '", bc_tag_name(th.tag()), "'");
      continue;
    }
    CF_REQUIRE(degree >= 0, "parse-error: form file must declare degree before terms");
    CF_REQUIRE(tok[0] == "s" || tok[0] == "t",
               "parse-error: term row must start with s or t at line ", lineno);
    bool is_t = tok[0] == "t";
    CF_REQUIRE(!is_t || degree >= 1,
               "parse-error: degree-0 forms have no time block (line ", lineno, ")");
    CF_REQUIRE(tok.size() >= 6, "parse-error: short term row at line ", lineno);
    double p0 = tok[2].empty() ? 0.0 : to_num(tok[2], lineno);
    double p1 = tok[3].empty() ? 0.0 : to_num(tok[3], lineno);
    double p2 = tok[4].empty() ? 0.0 : to_num(tok[4], lineno);
    PiecewiseTrig prof = parse_profile(tok[1], p0, p1, p2, lineno);
    int block_degree = is_t ? degree - 1 : degree;
    CF_REQUIRE(block_degree <= th.dim(), "parse-error: term degree ", block_degree,
               " exceeds the mesh dimension (line ", lineno, ")");
    Index want = th.block(block_degree).Mlump.size();
    Index got = static_cast<Index>(tok.size()) - 5;
    CF_REQUIRE(got == want, "parse-error: term row at line ", lineno, " has ", got,
               " coefficients; the degree-", block_degree, " block needs ", want);
    Vec v(want);
    for (Index i = 0; i < want; ++i)
      v[i] = to_num(tok[static_cast<std::size_t>(5 + i)], lineno);
    (is_t ? tparts : sparts).push_back({std::move(v), std::move(prof)});
  }
  CF_REQUIRE(degree == expected_degree, "parse-error: form file degree ", degree,
             " does not match the configured degree ", expected_degree);
  return separable_form(th, degree, std::move(tparts), std::move(sparts));
}

void save_form_samples(const GaugeTheory& th, const SpacetimeForm& f, double t0,
                       double t1, int samples, const std::string& path) {
  CF_REQUIRE(samples >= 2, "precondition: sample table needs at least 2 rows");
  Index nt = f.degree >= 1 ? th.block(f.degree - 1).Mlump.size() : 0;
  Index ns = f.degree <= th.dim() ? th.block(f.degree).Mlump.size() : 0;
  std::ostringstream os;
  os << "time";
  for (Index i = 0; i < nt; ++i) os << ",t" << i;
  for (Index i = 0; i < ns; ++i) os << ",s" << i;
  os << '\n';
  for (int q = 0; q < samples; ++q) {
    double t = t0 + (t1 - t0) * q / (samples - 1);
    os << fmt_g(t);
    if (nt > 0) {
      Vec vt = f.tpart.absent() ? Vec::Zero(nt) : f.tpart.eval(t);
      for (Index i = 0; i < nt; ++i) os << ',' << fmt_g(vt[i]);
    }
    if (ns > 0) {
      Vec vs = f.spart.absent() ? Vec::Zero(ns) : f.spart.eval(t);
      for (Index i = 0; i < ns; ++i) os << ',' << fmt_g(vs[i]);
    }
    os << '\n';
  }
  write_text(path, os.str());
}

// -------------------------------------------------------------------- verify

VerifyReport run_verify(const RunConfig& cfg) {
  VerifyReport vr;
  auto add = [&](CheckResult c) {
    vr.all_pass = vr.all_pass && c.pass;
    vr.checks.push_back(std::move(c));
  };

  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  const int n = c.dim;
  const int keff = std::max(1, cfg.degree);
  std::mt19937_64 rng(cfg.seed);
  const double span = cfg.t1 - cfg.t0;

  {  // dd = 0 and (transposed) boundary-of-boundary, exact integers
    double v = 0;
    for (int kk = 0; kk + 2 <= n; ++kk) {
      SpMat dd = exterior_derivative(c, kk + 1) * exterior_derivative(c, kk);
      for (Index col = 0; col < dd.outerSize(); ++col)
        for (SpMat::InnerIterator it(dd, col); it; ++it)
          v = std::max(v, std::abs(it.value()));
    }
    add({"integer-exactness", v == 0.0, v, 0.0, "max |d d| entry over all degrees"});
  }

  {  // formal self-adjointness of the constrained operator
    ConstrainedOperator op = build_constrained(c, keff, bc);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      Vec a(op.total_dofs()), b(op.total_dofs());
      for (Index i = 0; i < a.size(); ++i) a[i] = coef(rng);
      for (Index i = 0; i < b.size(); ++i) b[i] = coef(rng);
      double defect = box_green_defect(op, a, op, b);
      double den = 0;
      Index off = 0;
      for (const ConstrainedBlock& blk : op.blocks) {
        Index m = blk.Mlump.size();
        Vec aj = a.segment(off, m), bj = b.segment(off, m);
        den += (blk.A * aj).norm() * bj.norm() + aj.norm() * (blk.A * bj).norm();
        off += m;
      }
      worst = std::max(worst, std::abs(defect) / std::max(den, kTiny));
    }
    add({"self-adjointness", worst <= 1e-10, worst, 1e-10,
         "20 random constrained pairs"});
  }

  {  // positivity of every degree block
    double v = 0;
    for (int j = 0; j <= n; ++j) {
      const ModeBasis& b = th.basis(j);
      if (b.eigenvalues.size() == 0 || b.op_norm == 0) continue;
      v = std::max(v, -b.eigenvalues.minCoeff() / b.op_norm);
    }
    add({"positivity", v <= 1e-9, v, 1e-9, "min eigenvalue over operator norm"});
  }

  {  // boundary-triple identity
    TripleIdentityReport tr = triple_identity_check(c, keff, 12, cfg.seed);
    std::ostringstream d;
    d << "diagonal " << fmt_g(tr.diagonal_max) << ", smooth decay x"
      << fmt_g(tr.decay_factor);
    add({"triple-identity", tr.pass && tr.interior_max <= 1e-10, tr.interior_max,
         1e-10, d.str()});
  }

  {  // propagator kernel initial conditions
    const ModeBasis& b = th.basis(cfg.degree);
    double v0 = green_kernel(b, 0.0).cwiseAbs().maxCoeff();
    const double eps = 1e-5;
    Mat slope = green_kernel(b, eps) / eps;
    double v1 = (slope - Mat::Identity(slope.rows(), slope.cols())).cwiseAbs().maxCoeff();
    add({"kernel-initial-conditions", v0 == 0.0 && v1 <= 1e-6, std::max(v0, v1), 1e-6,
         "K(0) exactly zero; differenced slope vs identity"});
  }

  {  // (alpha, G+- beta) = (G-+ alpha, beta)
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      SpacetimeForm alpha = random_compact_form(th, keff, rng, cfg.t0, cfg.t1, true);
      SpacetimeForm beta = random_compact_form(th, keff, rng, cfg.t0, cfg.t1, true);
      double lhs = lorentz_pairing(th, alpha, green_form(th, beta, GreenKind::Retarded));
      double rhs = lorentz_pairing(th, green_form(th, alpha, GreenKind::Advanced), beta);
      worst = std::max(worst, rel_err(lhs, rhs));
    }
    add({"adjoint-relation", worst <= 1e-8, worst, 1e-8, "5 random source pairs"});
  }

  // Commutation of the causal propagator with d (normal family) / delta
  // (tangential family): a property of the relative/absolute realizations,
  // not of the collar (Dirichlet/Robin) ones, so gated on the former.
  if (gauge_family(bc.tag)) {
    bool tang = tangential_family(bc.tag);
    int lo = tang ? std::max(keff, 1) : std::min(keff, n - 1);
    if (!tang && lo < 0) lo = 0;
    SpacetimeForm f = random_compact_form(th, lo, rng, cfg.t0, cfg.t1, false);
    SpacetimeForm gf = green_form(th, f, GreenKind::Causal);
    SpacetimeForm mapped = tang ? codifferential_separable(th, f)
                                : coboundary_separable(th, f);
    SpacetimeForm gm = green_form(th, mapped, GreenKind::Causal);
    double num = 0, den = 0;
    for (int q = 0; q < 7; ++q) {
      double t = cfg.t0 + span * (q + 0.5) / 7.0;
      if (tang) {
        // (delta u)_s = delta u_s + du_t/dt ; (delta u)_t = -delta u_t
        Vec us = gf.spart.absent() ? Vec::Zero(th.block(lo).Mlump.size())
                                   : gf.spart.eval(t);
        Vec lhs_s = th.codifferential(lo) * us;
        if (!gf.tpart.absent()) lhs_s += gf.tpart.eval_dt(t);
        Vec rhs_s = gm.spart.absent() ? Vec::Zero(lhs_s.size()) : gm.spart.eval(t);
        num = std::max(num, th.block_norm(lo - 1, lhs_s - rhs_s));
        den = std::max(den, th.block_norm(lo - 1, rhs_s) + th.block_norm(lo, us));
      } else {
        Vec us = gf.spart.absent() ? Vec::Zero(th.block(lo).Mlump.size())
                                   : gf.spart.eval(t);
        Vec lhs_hi = th.coboundary(lo + 1) * us;
        Vec rhs_hi = gm.spart.absent() ? Vec::Zero(lhs_hi.size()) : gm.spart.eval(t);
        Vec lhs_t = gf.spart.absent() ? Vec::Zero(us.size()) : gf.spart.eval_dt(t);
        Vec rhs_t = gm.tpart.absent() ? Vec::Zero(lhs_t.size()) : gm.tpart.eval(t);
        num = std::max(num, th.block_norm(lo + 1, lhs_hi - rhs_hi) +
                                th.block_norm(lo, lhs_t - rhs_t));
        den = std::max(den, th.block_norm(lo + 1, rhs_hi) + th.block_norm(lo, us));
      }
    }
    double v = num / std::max(den, kTiny);
    add({"commutation", v <= 1e-8, v, 1e-8,
         tang ? "delta after causal propagation" : "d after causal propagation"});
  }

  {  // cohomology: long exact sequence and Lefschetz duality
    BettiReport br = cohomology_report(c);
    bool pass = br.lefschetz_ok && br.les_alternating_sum == 0;
    std::ostringstream d;
    d << "absolute (";
    for (std::size_t i = 0; i < br.absolute.size(); ++i)
      d << (i ? "," : "") << br.absolute[i];
    d << "), relative (";
    for (std::size_t i = 0; i < br.relative.size(); ++i)
      d << (i ? "," : "") << br.relative[i];
    d << ")";
    add({"cohomology-duality", pass, static_cast<double>(br.les_alternating_sum), 0.0,
         d.str()});
  }

  if (gauge_family(bc.tag)) {  // harmonic kernel dimensions match Betti numbers
    bool natural = !tangential_family(bc.tag);
    std::vector<Index> bet = natural ? betti_absolute(c) : betti_relative(c);
    double v = 0;
    for (int j = 0; j <= n; ++j)
      v += std::abs(static_cast<double>(th.basis(j).n_zero - bet[static_cast<std::size_t>(j)]));
    add({"kernel-vs-betti", v == 0.0, v, 0.0,
         natural ? "absolute cohomology" : "relative cohomology"});
  }

  {  // observable pairing antisymmetry, sigma identities, radical
    const Index n_h = [&] {
      Index z = 0;
      const ModeBasis& b = th.basis(keff);
      for (Index j = 0; j < b.eigenvalues.size(); ++j)
        if (b.is_zero_mode(j)) ++z;
      return z;
    }();
    GeneratorBudget gb;
    gb.count = n_h + 4;
    gb.t0 = cfg.t0;
    gb.t1 = cfg.t1;
    gb.seed = cfg.seed;
    std::vector<ObservableGenerator> gens = build_generators(th, keff, gb);
    PairingMatrix pm = pairing_matrix(th, gens);
    add({"pairing-antisymmetry", pm.antisymmetry <= 1e-8, pm.antisymmetry, 1e-8,
         std::to_string(gens.size()) + " generators"});

    // The presymplectic identities are statements about the gauge (relative/
    // absolute) realizations: they need causal solutions of coclosed sources
    // to stay Lorenz, which is the propagator-codifferential commutation
    // property of those families.
    if (gauge_family(bc.tag)) {
      TemporalWindow w = temporal_split(cfg.t0 + 0.30 * span, cfg.t0 + 0.70 * span);
      GaugePotential a1{green_form(th, gens[0].alpha, GreenKind::Causal), {}};
      GaugePotential a2{green_form(th, gens[1].alpha, GreenKind::Causal), {}};
      double wmax = pm.w.size() > 0 ? pm.w.cwiseAbs().maxCoeff() : 0.0;
      double scale = std::max(1.0, wmax);
      double s12 = sigma(th, a1, a2, w);
      double p12 = pm.w(0, 1);
      double vid = std::abs(s12 - p12) / scale;
      add({"sigma-identity", vid <= 1e-6, vid, 1e-6,
           "sigma(Ga,Gb) against (a,Gb), value " + fmt_g(s12)});

      double s11 = sigma(th, a1, a1, w);
      add({"sigma-antisymmetry", std::abs(s11) <= 1e-7 * scale, std::abs(s11),
           1e-7 * scale, "sigma(A,A)"});

      SpacetimeForm chi = random_compact_form(th, keff - 1, rng, cfg.t0, cfg.t1, false);
      GaugePotential a2g{a2.base, {chi}};
      double vg = std::abs(sigma(th, a1, a2g, w) - s12);
      add({"sigma-gauge-invariance", vg <= 1e-7 * scale, vg, 1e-7 * scale,
           "pure-gauge shift of one argument"});
    }

    if (gauge_family(bc.tag)) {
      RadicalReport rad = radical(th, gens, pm);
      bool pass = rad.decided && rad.radical_dim == rad.matched_betti;
      std::ostringstream d;
      d << "radical " << rad.radical_dim << ", betti " << rad.matched_betti
        << ", gap " << fmt_g(rad.gap);
      if (!rad.note.empty()) d << "; " << rad.note;
      add({"radical-vs-betti", pass,
           std::abs(static_cast<double>(rad.radical_dim - rad.matched_betti)), 0.0,
           d.str()});
    }
  }

  return vr;
}

// ------------------------------------------------------------------ commands

namespace {

int cmd_mesh(const RunConfig& cfg) {
  SimplicialComplex c = config_mesh(cfg);
  ensure_outdir(cfg);
  save_mesh(c, opath(cfg, "mesh.json"));
  ordered_json rep = report_header(cfg, "mesh");
  rep["dimension"] = c.dim;
  ordered_json counts = ordered_json::array(), bcounts = ordered_json::array();
  for (int k = 0; k <= c.dim; ++k) {
    counts.push_back(c.count(k));
    Index nb = 0;
    for (char f : c.is_boundary[static_cast<std::size_t>(k)]) nb += f ? 1 : 0;
    bcounts.push_back(nb);
  }
  rep["counts"] = counts;
  rep["boundary_counts"] = bcounts;
  BettiReport br = cohomology_report(c);
  rep["betti_absolute"] = br.absolute;
  rep["betti_relative"] = br.relative;
  write_text(opath(cfg, "mesh-report.json"), rep.dump(2) + "\n");
  return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  ensure_outdir(cfg);
  write_spectrum_csv(th, cfg, opath(cfg, "spectrum.csv"));
  ordered_json rep = report_header(cfg, "spectrum");
  rep["bc"] = bc_tag_name(bc.tag);
  ordered_json blocks = ordered_json::array();
  for (int j = 0; j <= th.dim(); ++j) {
    const ModeBasis& b = th.basis(j);
    ordered_json e;
    e["degree"] = j;
    e["dofs"] = b.eigenvalues.size();
    e["kernel_dim"] = b.n_zero;
    e["operator_norm"] = b.op_norm;
    e["clip"] = b.clip;
    blocks.push_back(e);
  }
  rep["blocks"] = blocks;
  write_text(opath(cfg, "spectrum-report.json"), rep.dump(2) + "\n");
  return 0;
}

int cmd_cohomology(const RunConfig& cfg) {
  SimplicialComplex c = config_mesh(cfg);
  ensure_outdir(cfg);
  BettiReport br = cohomology_report(c);
  ordered_json rep = report_header(cfg, "cohomology");
  rep["betti_absolute"] = br.absolute;
  rep["betti_relative"] = br.relative;
  rep["betti_boundary"] = br.boundary;
  rep["lefschetz_ok"] = br.lefschetz_ok;
  rep["les_alternating_sum"] = br.les_alternating_sum;
  write_text(opath(cfg, "cohomology.json"), rep.dump(2) + "\n");
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  VerifyReport vr = run_verify(cfg);
  ensure_outdir(cfg);
  {
    SimplicialComplex c = config_mesh(cfg);
    BCKind bc = config_bc(cfg, c);
    GaugeTheory th(c, bc);
    write_spectrum_csv(th, cfg, opath(cfg, "spectrum.csv"));
  }
  ordered_json rep = report_header(cfg, "verify");
  ordered_json checks = ordered_json::array();
  for (const CheckResult& cr : vr.checks) {
    ordered_json e;
    e["name"] = cr.name;
    e["status"] = cr.pass ? "pass" : "fail";
    e["value"] = fmt_g(cr.value);
    e["tolerance"] = fmt_g(cr.tolerance);
    e["detail"] = cr.detail;
    checks.push_back(e);
  }
  rep["checks"] = checks;
  rep["all_pass"] = vr.all_pass;
  write_text(opath(cfg, "verify.json"), rep.dump(2) + "\n");
  return vr.all_pass ? 0 : 1;
}

int cmd_propagate(const RunConfig& cfg) {
  CF_REQUIRE(!cfg.source_file.empty(),
             "parse-error: propagate needs a source file (config key 'source')");
  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  SpacetimeForm src = load_form(th, cfg.source_file, cfg.degree);
  CF_REQUIRE(form_time_compact(src),
             "precondition: propagation source must be compactly supported in time "
             "(past-compact for the retarded orientation)");
  ensure_outdir(cfg);
  ordered_json rep = report_header(cfg, "propagate");
  ordered_json results;
  const std::pair<const char*, GreenKind> kinds[] = {
      {"retarded", GreenKind::Retarded},
      {"advanced", GreenKind::Advanced},
      {"causal", GreenKind::Causal}};
  for (const auto& [name, kind] : kinds) {
    SpacetimeForm u = green_form(th, src, kind);
    std::string path = opath(cfg, std::string(name) + ".csv");
    save_form_samples(th, u, cfg.t0, cfg.t1, cfg.samples, path);
    // residual of (d^2/dt^2 + L) u - src, blockwise, relative to the source
    double num = 0, den = 0;
    for (int q = 0; q < cfg.samples; ++q) {
      double t = cfg.t0 + (cfg.t1 - cfg.t0) * (q + 0.5) / cfg.samples;
      for (int blk = 0; blk < 2; ++blk) {
        bool is_t = blk == 0;
        int deg = is_t ? cfg.degree - 1 : cfg.degree;
        if (deg < 0 || deg > th.dim()) continue;
        const BlockField& ub = is_t ? u.tpart : u.spart;
        const BlockField& sb = is_t ? src.tpart : src.spart;
        Index m = th.block(deg).Mlump.size();
        Vec uv = ub.absent() ? Vec::Zero(m) : ub.eval(t);
        Vec ua = ub.absent() ? Vec::Zero(m) : ub.eval_dtt(t);
        Vec sv = sb.absent() ? Vec::Zero(m) : sb.eval(t);
        Vec resid = ua + (th.block(deg).A * uv).cwiseQuotient(th.block(deg).Mlump) - sv;
        // causal solutions are homogeneous: their defect is the source itself
        if (kind == GreenKind::Causal) resid += sv;
        num = std::max(num, th.block_norm(deg, resid));
        den = std::max(den, th.block_norm(deg, sv));
      }
    }
    ordered_json e;
    e["file"] = path;
    e["residual"] = fmt_g(den > 0 ? num / den : 0.0);
    results[name] = e;
  }
  rep["results"] = results;
  write_text(opath(cfg, "propagate.json"), rep.dump(2) + "\n");
  return 0;
}

int cmd_gaugefix(const RunConfig& cfg) {
  CF_REQUIRE(!cfg.potential_file.empty(),
             "parse-error: gaugefix needs a potential file (config key 'potential')");
  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  CF_REQUIRE(cfg.degree >= 1, "precondition: gauge fixing needs degree at least 1");
  SpacetimeForm base = load_form(th, cfg.potential_file, cfg.degree);
  GaugePotential a{std::move(base), {}};
  const double span = cfg.t1 - cfg.t0;
  TemporalWindow w = temporal_split(cfg.t0 + 0.35 * span, cfg.t0 + 0.65 * span);
  LorenzFixReport fix =
      tangential_family(bc.tag)
          ? lorenz_fix_tangential(th, a, w, cfg.t0, cfg.t1, cfg.samples)
          : lorenz_fix_normal(th, a, w, cfg.t0, cfg.t1, cfg.samples);

  ensure_outdir(cfg);
  // sampled fixed potential
  {
    Index nt = th.block(cfg.degree - 1).Mlump.size();
    Index ns = th.block(cfg.degree).Mlump.size();
    std::ostringstream os;
    os << "time";
    for (Index i = 0; i < nt; ++i) os << ",t" << i;
    for (Index i = 0; i < ns; ++i) os << ",s" << i;
    os << '\n';
    for (int q = 0; q < cfg.samples; ++q) {
      double t = cfg.t0 + span * q / (cfg.samples - 1);
      auto [vt, vs] = eval_potential(th, fix.fixed, t);
      os << fmt_g(t);
      for (Index i = 0; i < nt; ++i) os << ',' << fmt_g(vt[i]);
      for (Index i = 0; i < ns; ++i) os << ',' << fmt_g(vs[i]);
      os << '\n';
    }
    write_text(opath(cfg, "fixed.csv"), os.str());
  }

  double chi_scale = 0;
  for (int q = 0; q < cfg.samples; ++q) {
    double t = cfg.t0 + span * (q + 0.5) / cfg.samples;
    if (!fix.chi.spart.absent())
      chi_scale = std::max(chi_scale, th.block_norm(fix.chi.degree, fix.chi.spart.eval(t)));
    if (fix.chi.degree >= 1 && !fix.chi.tpart.absent())
      chi_scale =
          std::max(chi_scale, th.block_norm(fix.chi.degree - 1, fix.chi.tpart.eval(t)));
  }

  ordered_json rep = report_header(cfg, "gaugefix");
  rep["bc"] = bc_tag_name(bc.tag);
  auto shell = [](const OnShellReport& r) {
    ordered_json e;
    e["field_scale"] = fmt_g(r.field_scale);
    e["maxwell_residual"] = fmt_g(r.maxwell_residual);
    e["lorenz_residual"] = fmt_g(r.lorenz_residual);
    e["wave_residual"] = fmt_g(r.wave_residual);
    e["boundary_residual"] = fmt_g(r.boundary_residual);
    e["flux_residual"] = fmt_g(r.flux_residual);
    return e;
  };
  rep["before"] = shell(fix.before);
  rep["after"] = shell(fix.after);
  rep["chi_scale"] = fmt_g(chi_scale);
  rep["trace_kill_residual"] = fmt_g(fix.trace_kill_residual);
  rep["rounds"] = fix.rounds;
  rep["fixed_file"] = opath(cfg, "fixed.csv");
  write_text(opath(cfg, "gaugefix.json"), rep.dump(2) + "\n");
  return 0;
}

std::vector<ObservableGenerator> config_generators(const RunConfig& cfg,
                                                   const GaugeTheory& th, int keff) {
  Index n_h = 0;
  const ModeBasis& b = th.basis(keff);
  for (Index j = 0; j < b.eigenvalues.size(); ++j)
    if (b.is_zero_mode(j)) ++n_h;
  GeneratorBudget gb;
  gb.count = n_h + 6;
  gb.t0 = cfg.t0;
  gb.t1 = cfg.t1;
  gb.seed = cfg.seed;
  return build_generators(th, keff, gb);
}

int cmd_symplectic(const RunConfig& cfg) {
  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  const int keff = std::max(1, cfg.degree);
  std::vector<ObservableGenerator> gens = config_generators(cfg, th, keff);
  PairingMatrix pm = pairing_matrix(th, gens);
  ensure_outdir(cfg);
  write_pairing_csv(pm, opath(cfg, "w.csv"));

  ordered_json rep = report_header(cfg, "symplectic");
  rep["bc"] = bc_tag_name(bc.tag);
  rep["generators"] = pm.labels;
  rep["antisymmetry"] = fmt_g(pm.antisymmetry);
  if (gauge_family(bc.tag)) {
    const double span = cfg.t1 - cfg.t0;
    TemporalWindow w = temporal_split(cfg.t0 + 0.30 * span, cfg.t0 + 0.70 * span);
    GaugePotential a1{green_form(th, gens[0].alpha, GreenKind::Causal), {}};
    GaugePotential a2{green_form(th, gens[1].alpha, GreenKind::Causal), {}};
    double s12 = sigma(th, a1, a2, w);
    double s11 = sigma(th, a1, a1, w);
    std::mt19937_64 rng(cfg.seed + 1);
    SpacetimeForm chi = random_compact_form(th, keff - 1, rng, cfg.t0, cfg.t1, false);
    GaugePotential a2g{a2.base, {chi}};
    double sg = sigma(th, a1, a2g, w);
    rep["sigma_identity_error"] = fmt_g(rel_err(s12, pm.w(0, 1)));
    rep["sigma_self"] = fmt_g(s11);
    rep["sigma_gauge_shift"] = fmt_g(std::abs(sg - s12));
  } else {
    rep["sigma_note"] =
        "presymplectic spot checks apply to the relative/absolute families only";
  }
  rep["w_file"] = opath(cfg, "w.csv");
  write_text(opath(cfg, "symplectic.json"), rep.dump(2) + "\n");
  return 0;
}

int cmd_radical(const RunConfig& cfg) {
  SimplicialComplex c = config_mesh(cfg);
  BCKind bc = config_bc(cfg, c);
  GaugeTheory th(c, bc);
  const int keff = std::max(1, cfg.degree);
  std::vector<ObservableGenerator> gens = config_generators(cfg, th, keff);
  PairingMatrix pm = pairing_matrix(th, gens);
  RadicalReport rad = radical(th, gens, pm);

  std::vector<GaugePotential> sols;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < std::min<std::size_t>(3, gens.size()); ++j) {
    sols.push_back({green_form(th, gens[j].alpha, GreenKind::Causal), {}});
    labels.push_back("causal-image-" + std::to_string(j));
  }
  std::mt19937_64 rng(cfg.seed + 2);
  SpacetimeForm chi = random_compact_form(th, keff - 1, rng, cfg.t0, cfg.t1, false);
  sols.push_back({make_form(th, keff), {chi}});
  labels.push_back("pure-gauge");
  OptimalityReport opt =
      optimality_check(th, gens, pm, sols, cfg.t0, cfg.t1, labels);

  ensure_outdir(cfg);
  write_pairing_csv(pm, opath(cfg, "w.csv"));
  ordered_json rep = report_header(cfg, "radical");
  rep["bc"] = bc_tag_name(bc.tag);
  rep["generators"] = pm.labels;
  rep["antisymmetry"] = fmt_g(pm.antisymmetry);
  ordered_json sv = ordered_json::array();
  for (Index i = 0; i < rad.singular_values.size(); ++i)
    sv.push_back(fmt_g(rad.singular_values[i]));
  rep["singular_values"] = sv;
  rep["rank"] = rad.rank;
  rep["radical_dim"] = rad.radical_dim;
  rep["matched_betti"] = rad.matched_betti;
  rep["gap"] = fmt_g(rad.gap);
  rep["decided"] = rad.decided;
  ordered_json qn = ordered_json::array();
  for (char q : rad.quotient_null) qn.push_back(q ? 1 : 0);
  rep["quotient_null"] = qn;
  rep["note"] = rad.note;
  ordered_json optj;
  optj["separating"] = opt.separating;
  optj["non_redundant"] = opt.non_redundant;
  optj["spanning_rank"] = opt.spanning_rank;
  optj["expected_rank"] = opt.expected_rank;
  optj["gauge_trivial_solutions"] = opt.gauge_trivial_solutions;
  optj["quotient_null_generators"] = opt.quotient_null_generators;
  optj["violations"] = opt.violations;
  rep["optimality"] = optj;
  rep["w_file"] = opath(cfg, "w.csv");
  write_text(opath(cfg, "radical.json"), rep.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg) {
  if (command == "mesh") return cmd_mesh(cfg);
  if (command == "spectrum") return cmd_spectrum(cfg);
  if (command == "verify") return cmd_verify(cfg);
  if (command == "propagate") return cmd_propagate(cfg);
  if (command == "gaugefix") return cmd_gaugefix(cfg);
  if (command == "cohomology") return cmd_cohomology(cfg);
  if (command == "symplectic") return cmd_symplectic(cfg);
  if (command == "radical") return cmd_radical(cfg);
  CF_REQUIRE(false, "parse-error: unknown command '", command, "'");
  return 2;
}

}  // namespace cauchyform
