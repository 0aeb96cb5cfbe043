// polyharm: center placement, density certification, convergence studies and
// dyadic checks for surface-spline approximation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "polyharm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Surface-spline approximation from nonuniform centers"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
  };
  Args args;
  const char* help[] = {"Generate a multiresolution center set and its ring report",
                        "Sample the minimal density and certify its growth constants",
                        "Run a convergence study over a sweep of levels",
                        "Classify dyadic cubes against a density field and check the bounds"};
  for (std::size_t i = 0; i < polyharm::cli::commands().size(); ++i) {
    auto* sub = app.add_subcommand(polyharm::cli::commands()[i], help[i]);
    sub->add_option("--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "Output directory")->required();
    sub->add_option("--seed", args.seed, "Seed for randomized sampling");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return polyharm::cli::run(command, args.config, args.out, args.seed);
}
