#include <CLI11.hpp>

#include <iostream>

#include "lgqfi/scenarios.hpp"

int main(int argc, char** argv) {
  using lgqfi::scenarios::Invocation;

  CLI::App app{"Temporal correlations, Leggett-Garg functions and quantum Fisher information bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LGQFI_VERSION);

  Invocation inv;
  std::string config, out, format;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "RunConfig JSON file")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    sub->add_option("--out", out, "write output here instead of stdout");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "base seed for sampled quantities");
    sub->add_option("--threads", inv.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* gamma = app.add_subcommand("gamma-table", "tabulate the thermal kernel maximum gamma(y)");
  common(gamma, false);
  gamma->add_option("--y-min", inv.y_min, "smallest y")->capture_default_str();
  gamma->add_option("--y-max", inv.y_max, "largest y")->capture_default_str();
  gamma->add_option("--points", inv.points, "number of rows")->capture_default_str();

  common(app.add_subcommand("certify", "evaluate every enabled QFI lower bound on a tau grid"), true);
  common(app.add_subcommand("qubit", "thermal qubit identity check"), false);
  common(app.add_subcommand("tfim", "short-time growth of K in the Ising chain ground state"), false);
  common(app.add_subcommand("ghz", "GHZ saturation and entanglement depth"), false);
  common(app.add_subcommand("protocol", "simulate projective and weak two-time measurements"), true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const auto* sub = app.get_subcommands().front();
  inv.command = sub->get_name();
  if (sub->count("--config")) inv.config = config;
  if (sub->count("--out")) inv.out = out;
  if (sub->count("--format")) inv.format = format;
  if (sub->count("--seed")) inv.seed = seed;
  return lgqfi::scenarios::run(inv, std::cout, std::cerr);
}
