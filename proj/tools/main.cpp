#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "symkit/cli.hpp"

using symkit::Command;
using symkit::JobSpec;

int main(int argc, char** argv) {
  CLI::App app{"Lie point symmetries, Lie algebras, quasi-polynomial first integrals and Noether currents"};
  app.require_subcommand(1);
  app.fallthrough();

  JobSpec job;
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--n1", job.params.n1, "Solver pass limit before completion")->check(CLI::NonNegativeNumber);
  app.add_option("--n2", job.params.n2, "Solver pass limit after completion")->check(CLI::NonNegativeNumber);
  app.add_option("--n3", job.params.n3, "Outer iteration limit")->check(CLI::NonNegativeNumber);

  auto* lie = app.add_subcommand("lie", "Lie point symmetries of a .deq system");
  auto* detsys = app.add_subcommand("detsys", "Determining system only");
  detsys->add_flag("--count-only", job.count_only, "Print the number of equations");
  auto* check = app.add_subcommand("check", "Check generators against a system");
  auto* algebra = app.add_subcommand("algebra", "Commutation table, structure constants, solvability");
  for (auto* sub : {check, algebra}) sub->add_option("--gen", job.generators, "Generator such as \"x*D[x] + D[t]\"");
  auto* noether = app.add_subcommand("noether", "Conserved currents of a Lagrangian");
  noether->add_option("--degree", job.degree, "Polynomial degree of the ansatz")->check(CLI::NonNegativeNumber);

  auto* qp = app.add_subcommand("qp", "Quasi-polynomial systems (.deq or .json)");
  qp->require_subcommand(1);
  std::map<CLI::App*, symkit::QpMode> modes;
  modes[qp->add_subcommand("lv", "Lotka-Volterra form")] = symkit::QpMode::Lv;
  modes[qp->add_subcommand("darboux", "Semi-invariants")] = symkit::QpMode::Darboux;
  auto* integrals = qp->add_subcommand("integrals", "Quasi-polynomial and logarithmic first integrals");
  modes[integrals] = symkit::QpMode::Integrals;
  integrals->add_flag("--mixed", job.mixed_logs, "Polynomials in x and ln(x)");
  modes[qp->add_subcommand("symmetries", "Quasi-polynomial symmetry fields")] = symkit::QpMode::Symmetries;
  for (auto& [sub, mode] : modes) {
    sub->add_option("input", job.inputs, "Input file")->required()->check(CLI::ExistingFile);
    if (mode != symkit::QpMode::Lv) sub->add_option("--degree", job.degree, "Degree")->check(CLI::PositiveNumber);
    sub->fallthrough();
  }

  auto* bench = app.add_subcommand("bench", "Run a corpus and report");
  bench->add_option("inputs", job.inputs, "Files or directories");
  bench->add_flag("--timings", job.timings, "Include wall times in JSON");

  std::map<CLI::App*, Command> commands = {{lie, Command::Lie},         {detsys, Command::Detsys},
                                           {check, Command::Check},     {algebra, Command::Algebra},
                                           {noether, Command::Noether}, {qp, Command::Qp},
                                           {bench, Command::Bench}};
  for (auto* sub : {lie, detsys, check, algebra, noether}) {
    sub->add_option("input", job.inputs, "Input .deq file")->required()->check(CLI::ExistingFile);
  }
  for (auto& [sub, cmd] : commands) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : symkit::exit_code::kParseError;
  }
  for (auto& [sub, cmd] : commands) {
    if (sub->parsed()) job.command = cmd;
  }
  for (auto& [sub, mode] : modes) {
    if (sub->parsed()) job.qp_mode = mode;
  }
  job.format = format == "json" ? symkit::OutputFormat::Json : symkit::OutputFormat::Text;

  auto result = symkit::run(job);
  std::cout << result.output;
  if (!result.error.empty()) std::cerr << "symkit: " << result.error << "\n";
  return result.status;
}
