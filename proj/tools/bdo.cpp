// bdo: branch displacement optimizer and assembler for MCS-51 pseudo-assembly.

#include <CLI11.hpp>

#include "bdo/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Relax MCS-51 branch encodings and assemble a flat binary image"};

  bdo::RunConfig cfg;
  std::string strategy = "lfp";
  std::size_t max_iterations = 0;

  app.add_option("input", cfg.input, "Pseudo-assembly source")->required();
  app.add_option("--isa", cfg.isa, "Instruction set (only mcs51)")->capture_default_str();
  app.add_option("--isa-params", cfg.isa_params, "JSON file overriding conditional branch sizes");
  app.add_option("--strategy", strategy, "lfp | all-long | gfp | optimal")
      ->check(CLI::IsMember({"lfp", "all-long", "gfp", "optimal"}))
      ->capture_default_str();
  app.add_option("--emit-bin", cfg.emit_bin, "Write the machine image here");
  app.add_option("--dump-sigma", cfg.dump_sigma, "Write the address map here (JSON lines)");
  app.add_option("--trace", cfg.trace, "Write per-iteration branch lengths here (lfp only)");
  app.add_flag("--check-invariants", cfg.check_invariants, "Run every invariant checker; exit 3 on failure");
  app.add_flag("--report", cfg.report, "Compare bytes and cycles across all strategies");
  auto* iters = app.add_option("--max-iterations", max_iterations, "Cap on lfp iterations");
  app.add_option("--max-branches", cfg.max_branches, "Branch limit for the optimal strategy")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bdo::kExitInputError;
  }

  cfg.strategy = *bdo::strategy_from_string(strategy);
  if (iters->count() > 0) cfg.max_iterations_override = max_iterations;
  return bdo::run(cfg);
}
