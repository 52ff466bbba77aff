#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  tfn::cli::RunConfig config;
  std::string levels = "2,4,8";

  CLI::App app{"Transfunction kernel: identity approximations, warehouse transport, Markov and adjoint checks"};
  app.require_subcommand(1);
  for (const auto& name : tfn::cli::commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--input", config.input, "measure file (JSON)");
    sub->add_option("--target", config.target, "target or reference measure file (JSON)");
    sub->add_option("--transfunction", config.transfunction, "simple transfunction file (JSON)");
    sub->add_option("--plan", config.plan, "cell plan file (JSON), read against --input and --target");
    sub->add_option("--box", config.box, "workspace box, e.g. 0:1,0:1");
    sub->add_option("--levels", levels, "ascending covering levels, e.g. 2,4,8");
    sub->add_option("--alpha", config.alpha, "cost scale");
    sub->add_option("--power", config.power, "cost exponent");
    sub->add_option("--tol", config.tol, "check tolerance");
    sub->add_option("--seed", config.seed, "seed for random batteries");
    sub->add_option("--fields", config.fields, "field battery size");
    sub->add_option("--measures", config.measures, "measure battery size");
    sub->add_option("--budget", config.vertex_budget, "assignment-route vertices per side (0 skips the route)");
    sub->add_option("--out", config.out, "output directory for report.json and CSV tables");
    sub->callback([&config, sub] { config.command = sub->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << tfn::cli::diagnostic("invalid_input", e.what());
    return tfn::cli::kInvalid;
  }
  try {
    config.levels = tfn::cli::parse_levels(levels);
  } catch (const tfn::Error& e) {
    std::cerr << tfn::cli::diagnostic(tfn::to_string(e.kind()), e.what());
    return tfn::cli::kInvalid;
  }
  return tfn::cli::run(config, std::cout, std::cerr);
}
