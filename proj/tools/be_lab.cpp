#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "belab/cli.hpp"

int main(int argc, char** argv) {
  using namespace belab::cli;

  CLI::App app{"be_lab: numerical lab for the Bianchi-Egnell quotient of the fractional Sobolev inequality"};
  app.require_subcommand(1);

  RunConfig config;
  int d = 0;
  double s = 0.0;
  int quad_degree = 0;
  std::string eps;
  std::string output;
  std::string format = "text";

  const std::map<std::string, std::string> help = {
      {"constants", "Sobolev constant, eigenvalue ladder and closed-form constants"},
      {"gap", "spectral gap identity at l = 2"},
      {"moments", "sphere moments by gamma formula, expectation formula and quadrature"},
      {"dist", "distance of f_eps to the bubble manifold"},
      {"sweep", "quotient E(f_eps) over an eps grid"},
      {"fit", "sweep plus fit E = A + B eps + C eps^2"},
      {"theorem", "certify E(f_eps) < 4s/(d+2s+2)"},
      {"bound", "smallest E(f_eps) over a coarse eps grid up to 1"},
      {"selftest", "invariant suite over the validation grid"}};

  std::map<CLI::App*, Command> subs;
  for (const auto& [name, cmd] : command_names()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--d", d, "sphere dimension, d >= 2");
    sub->add_option("--s", s, "fractional order, 0 < s < d/2");
    sub->add_option("--quad-degree", quad_degree, "quadrature exactness degree");
    sub->add_option("--eps", eps, "comma-separated eps values");
    sub->add_option("--multistarts", config.multistarts, "solver multistarts");
    sub->add_option("--seed", config.seed, "offset into the start sequence");
    sub->add_option("--format", format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_option("--output", output, "write the report to this file");
    subs[sub] = cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  config.command = subs.at(chosen);
  if (chosen->count("--d")) config.d = d;
  if (chosen->count("--s")) config.s = s;
  if (chosen->count("--quad-degree")) config.quad_degree = quad_degree;
  if (chosen->count("--output")) config.output_path = output;
  config.format = format == "json" ? Format::json : format == "csv" ? Format::csv : Format::text;
  if (chosen->count("--eps")) {
    try {
      config.eps_list = parse_eps_list(eps);
    } catch (const belab::LabError& e) {
      std::cerr << "error [" << e.module() << "/" << e.parameter() << "]: " << e.what() << "\n";
      return 2;
    }
  }
  return run(config, std::cout, std::cerr);
}
