#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tvexact/conic.hpp"
#include "tvexact/fidelity.hpp"
#include "tvexact/measure.hpp"
#include "tvexact/operators.hpp"
#include "tvexact/pw_linear.hpp"
#include "tvexact/trig.hpp"

#include "json.hpp"

namespace tvexact {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PwLinearFamily {
  std::shared_ptr<const SimplicialMesh> mesh;
  std::vector<PwLinearFn> rho;
  Eigen::MatrixXd kernel_cols;  // m x r, <a_i, lambda_k>
};

struct TrigFamily {
  GammaMatrix gamma;
  TrigKernelData kernel;
};

/// Full problem description: operator, measurement family, fidelity (with
/// the data vector b inside), solver settings and post-processing switches.
struct ProblemSpec {
  RegularizerOp op = RegularizerOp::identity_unit(1);
  std::variant<PwLinearFamily, TrigFamily> family{};
  Fidelity fidelity = Fidelity::equality_to(Eigen::VectorXd::Zero(0));
  SolverSettings solver{};
  bool purify = true;
  bool sparsify = true;
  double amp_threshold = 1e-8;

  int m() const;
  void validate() const;  // throws SpecError
};

struct SolveReport {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;  // primal - dual
  int m = 0;
  int m_bar = 0;  // m - dim(A* ker L)
  int atoms_before = 0;
  int atoms_after_sparsify = 0;
  double certificate_max_eta = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double wall_time_s = 0.0;
  std::string status;

  nlohmann::json to_json() const;
};

struct AnalysisSolution {
  EvaluableSignal signal;  // kernel coefficients + final sparse measure
  DiscreteMeasure raw_measure;
  DiscreteMeasure sparse_measure;
  Eigen::VectorXd dual_q;
  CertificateRoots roots;  // trig route only
  SolveReport report;
};

/// Piecewise-linear family: direct vertex primal, optional support
/// purification (EqualityTo only), then per-cell sparsification. Trig family:
/// dual SDP, certificate root extraction, primal refit at the roots.
AnalysisSolution solve_analysis_problem(const ProblemSpec& spec);

struct CertificateCheck {
  bool support_ok = true;
  bool bound_ok = true;
  bool gap_ok = true;
  double worst_atom_distance = 0.0;  // to the unit-modulus set
  double max_eta = 0.0;
  double gap = 0.0;
  bool passed() const { return support_ok && bound_ok && gap_ok; }
  nlohmann::json to_json() const;
};

/// Diagnostic checks: atoms near the unit-modulus set of the certificate,
/// global bound |eta| <= 1 + tol on a 10^4 grid, and the primal-dual gap.
CertificateCheck verify_certificate(const AnalysisSolution& sol,
                                    const ProblemSpec& spec, double tol = 1e-6);

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  nlohmann::json overrides;  // per-experiment knobs, merged over defaults
};

/// Built-in reproductions: pwl-1d-identity, deriv-1d, 2d-identity-box,
/// trig-sweep. Writes atom CSVs, report.json and an SVG stem plot into
/// out_dir; returns the report.
nlohmann::json run_experiment(const ExperimentConfig& config);

struct RefinementRow {
  double h = 0.0;
  double objective = 0.0;
  double gap = 0.0;  // objective - trig dual optimum
};

/// Vertex-primal objectives for the trig measurements linearized on meshes of
/// size h, against the trig dual optimum as the continuous reference.
std::vector<RefinementRow> grid_refinement_study(const TrigFamily& family,
                                                 const Fidelity& fidelity,
                                                 const std::vector<double>& h_list,
                                                 const SolverSettings& settings = {});

/// JSON problem-spec loader (schema documented in the README). Paths inside
/// the spec resolve relative to base_dir.
ProblemSpec parse_problem_spec(const nlohmann::json& j, const std::string& base_dir);
ProblemSpec load_problem_spec(const std::string& path);

/// The conic program the spec's strategy would solve first (vertex primal for
/// the piecewise-linear family, dual SDP for the trig family).
ConicProblem export_conic(const ProblemSpec& spec);

/// Minimal hand-rolled stem/scatter plot.
struct PlotSeries {
  std::string label;
  std::string color;
  DiscreteMeasure measure;
};
void write_stem_svg(const std::string& path, const std::vector<PlotSeries>& series);

/// Greedy matching distance between atomic measures: sum over matched pairs
/// of |dx| + |dw| plus the absolute weight of unmatched atoms. Used as the
/// sweep recovery-error metric.
double atom_match_error(const DiscreteMeasure& truth, const DiscreteMeasure& rec,
                        bool torus = false);

}  // namespace tvexact
