#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvexact/pipeline.hpp"

namespace {

using namespace tvexact;
namespace fs = std::filesystem;

constexpr int kExitSolver = 2;
constexpr int kExitSpec = 3;
constexpr int kExitIo = 4;

void write_solution(const std::string& out_dir, const AnalysisSolution& sol) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir);
  write_atoms_csv(out_dir + "/atoms_raw.csv", sol.raw_measure);
  write_atoms_csv(out_dir + "/atoms_sparse.csv", sol.sparse_measure);
  std::ofstream os(out_dir + "/report.json");
  if (!os) throw IoError("cannot write report.json");
  os << sol.report.to_json().dump(2) << "\n";
  if (sol.sparse_measure.dim() <= 2)
    write_stem_svg(out_dir + "/plot.svg",
                   {{"recovered", "#1f77b4", sol.sparse_measure}});
}

int dispatch(int argc, char** argv) {
  CLI::App app{"exact sparse solutions of TV-regularized measure recovery problems"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "tvexact_out", exp_name, h_arg, override_arg;
  std::uint64_t seed = 1;

  auto* cmd_solve = app.add_subcommand("solve", "solve a problem spec");
  cmd_solve->add_option("--spec", spec_path, "problem spec (json)")->required();
  cmd_solve->add_option("--out", out_dir, "output directory");

  auto* cmd_exp = app.add_subcommand("experiment", "run a built-in experiment");
  cmd_exp->add_option("--name", exp_name, "pwl-1d-identity | deriv-1d | 2d-identity-box | trig-sweep")
      ->required();
  cmd_exp->add_option("--seed", seed, "random seed");
  cmd_exp->add_option("--out", out_dir, "output directory");
  cmd_exp->add_option("--override", override_arg, "json object merged into the defaults");

  auto* cmd_refine = app.add_subcommand("refine", "grid-refinement study for a trig spec");
  cmd_refine->add_option("--spec", spec_path, "problem spec (json, trig family)")->required();
  cmd_refine->add_option("--h", h_arg, "comma-separated mesh sizes, e.g. 0.1,0.05,0.025")
      ->required();
  cmd_refine->add_option("--out", out_dir, "output directory (optional)");

  auto* cmd_export = app.add_subcommand("export-conic", "write the finite conic program");
  cmd_export->add_option("--spec", spec_path, "problem spec (json)")->required();
  std::string out_file = "problem.txt";
  cmd_export->add_option("--out", out_file, "output file");

  CLI11_PARSE(app, argc, argv);

  if (cmd_solve->parsed()) {
    ProblemSpec spec = load_problem_spec(spec_path);
    AnalysisSolution sol = solve_analysis_problem(spec);
    write_solution(out_dir, sol);
    std::cout << sol.report.to_json().dump(2) << "\n";
    return 0;
  }

  if (cmd_exp->parsed()) {
    ExperimentConfig cfg;
    cfg.name = exp_name;
    cfg.seed = seed;
    cfg.out_dir = out_dir;
    if (!override_arg.empty()) {
      try {
        cfg.overrides = nlohmann::json::parse(override_arg);
      } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("bad --override json: ") + e.what());
      }
    }
    nlohmann::json rep = run_experiment(cfg);
    std::cout << rep.dump(2) << "\n";
    return 0;
  }

  if (cmd_refine->parsed()) {
    ProblemSpec spec = load_problem_spec(spec_path);
    if (!std::holds_alternative<TrigFamily>(spec.family))
      throw SpecError("refine requires a trig measurement family");
    std::vector<double> hs;
    std::stringstream ss(h_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) hs.push_back(std::stod(tok));
    auto table = grid_refinement_study(std::get<TrigFamily>(spec.family), spec.fidelity,
                                       hs, spec.solver);
    std::printf("%12s %22s %22s\n", "h", "objective", "gap");
    for (const auto& row : table)
      std::printf("%12g %22.12e %22.12e\n", row.h, row.objective, row.gap);
    if (cmd_refine->count("--out") > 0) {
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      std::ofstream os(out_dir + "/refine.csv");
      if (!os) throw IoError("cannot write refine.csv");
      os << "h,objective,gap\n";
      char buf[120];
      for (const auto& row : table) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", row.h, row.objective,
                      row.gap);
        os << buf;
      }
    }
    return 0;
  }

  if (cmd_export->parsed()) {
    ProblemSpec spec = load_problem_spec(spec_path);
    write_problem(out_file, export_conic(spec));
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const SolveFailure& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  }
}
