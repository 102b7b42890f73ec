#include "cauchyform/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"cauchyform: boundary-conditioned wave and gauge dynamics on "
               "simplicial complexes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  long long seed_override = -1;
  int refine_override = -1;
  std::string source_override, potential_override;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"mesh", "generate or load a complex and report its invariants"},
      {"spectrum", "eigenvalues of every boundary-conditioned degree block"},
      {"verify", "run the full invariant suite; exit 0 iff every check passes"},
      {"propagate", "retarded/advanced/causal response to a compact source"},
      {"gaugefix", "restore the Lorenz condition for a loaded potential"},
      {"cohomology", "absolute/relative Betti tables and duality checks"},
      {"symplectic", "observable generators and their pairing matrix"},
      {"radical", "pairing-matrix radical and generator optimality report"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_option("--seed", seed_override, "override the RNG seed");
    sub->add_option("--refine", refine_override,
                    "override the uniform refinement count");
    sub->add_option("--source", source_override,
                    "override the source form file (propagate)");
    sub->add_option("--potential", potential_override,
                    "override the potential form file (gaugefix)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    cauchyform::RunConfig cfg = cauchyform::load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (refine_override >= 0) cfg.refine = refine_override;
    if (!source_override.empty()) cfg.source_file = source_override;
    if (!potential_override.empty()) cfg.potential_file = potential_override;
    return cauchyform::run_command(cmd, cfg);
  } catch (const cauchyform::Error& e) {
    std::cerr << e.what() << "\n";
    const std::string what = e.what();
    const bool usage = what.starts_with("parse-error:") ||
                       what.starts_with("precondition:") ||
                       what.starts_with("io-error:");
    return usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
