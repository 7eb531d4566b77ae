#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "tvexact/conic.hpp"
#include "tvexact/fidelity.hpp"
#include "tvexact/measure.hpp"
#include "tvexact/rng.hpp"

namespace tvexact {

/// Simplicial mesh of a polyhedral domain: intervals in 1-D, triangles in
/// 2-D. Cells cover the domain with disjoint interiors.
struct SimplicialMesh {
  int dim = 1;
  std::vector<Eigen::VectorXd> vertices;
  std::vector<std::vector<int>> cells;  // d+1 vertex indices each

  static SimplicialMesh uniform_1d(int n_cells, double lo = 0.0, double hi = 1.0);
  /// n x n squares on [0,1]^2, each split along the lower-left to
  /// upper-right diagonal.
  static SimplicialMesh uniform_grid_2d(int n_cells_per_side);

  std::vector<Region> regions() const;
  /// Index of a cell whose closure contains x, or -1. Brute-force scan.
  int locate(const Eigen::VectorXd& x, double tol = 1e-12) const;

  void save(const std::string& path) const;
  static SimplicialMesh load(const std::string& path);
};

/// Continuous piecewise-linear function given by one value per mesh vertex.
struct PwLinearFn {
  std::shared_ptr<const SimplicialMesh> mesh;
  Eigen::VectorXd vertex_values;

  double operator()(const Eigen::VectorXd& x) const;
  double operator()(double x) const;
};

double eval_pwl(const PwLinearFn& f, const Eigen::VectorXd& x);

/// M = [ <a_i, lambda_k> | rho_i(x_j) ]: kernel pairings first, then the
/// measurement functions evaluated at the nodes.
Eigen::MatrixXd assemble_M(const Eigen::MatrixXd& kernel_cols,
                           const std::vector<PwLinearFn>& rho,
                           const std::vector<Eigen::VectorXd>& nodes);

struct VertexSolveInfo {
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double conic_gap = 0.0;
  int iterations = 0;
};

struct VertexPrimalResult {
  DiscreteMeasure measure;       // supported on mesh vertices
  Eigen::VectorXd kernel_coeffs;
  VertexSolveInfo info;
};

struct VertexPrimalProgram {
  ConicProblem problem;
  int c_offset = 0;     // kernel coefficients
  int dpos_offset = 0;  // d = dpos - dneg over vertices
  int dneg_offset = 0;
  int n_vertices = 0;
  int r = 0;
};

/// Conic form of min_{c,d} f_b(M [c; d]) + ||d||_1 over the mesh vertices.
VertexPrimalProgram build_vertex_primal(const SimplicialMesh& mesh,
                                        const std::vector<PwLinearFn>& rho,
                                        const Eigen::MatrixXd& kernel_cols,
                                        const Fidelity& f);

/// min_{c,d} f_b(M [c; d]) + ||d||_1 over all mesh vertices, as a conic
/// program (d split into positive and negative parts). Atoms below
/// amp_threshold are dropped from the returned measure.
VertexPrimalResult solve_vertex_primal(const SimplicialMesh& mesh,
                                       const std::vector<PwLinearFn>& rho,
                                       const Eigen::MatrixXd& kernel_cols,
                                       const Fidelity& f,
                                       const SolverSettings& settings = {},
                                       double amp_threshold = 1e-8);

struct VertexDualResult {
  Eigen::VectorXd q;
  double objective = 0.0;  // value of sup -f_b*(q) over the vertex constraints
  VertexSolveInfo info;
};

/// max_q -f_b*(q) s.t. |sum_i q_i rho_i(v_j)| <= 1 at every vertex and
/// <q, A lambda_k> = 0 for the kernel basis. Finitely many constraints since
/// a piecewise-linear certificate peaks at vertices.
VertexDualResult solve_vertex_dual(const SimplicialMesh& mesh,
                                   const std::vector<PwLinearFn>& rho,
                                   const Eigen::MatrixXd& kernel_cols,
                                   const Fidelity& f,
                                   const SolverSettings& settings = {});

/// Per-cell merge of same-signed atoms (measure_core rule applied to the
/// mesh regions).
DiscreteMeasure sparsify_solution(const DiscreteMeasure& mu,
                                  const SimplicialMesh& mesh,
                                  double amp_threshold = 1e-8);

/// m piecewise-linear functions with i.i.d. standard normal vertex values.
std::vector<PwLinearFn> random_pwl_measurements(
    const std::shared_ptr<const SimplicialMesh>& mesh, int m, Rng& rng);

/// Vertex-sample an arbitrary function onto the mesh (the standard
/// discretization viewed as exact piecewise-linear measurements).
PwLinearFn linearize_on_mesh(const std::shared_ptr<const SimplicialMesh>& mesh,
                             const std::function<double(const Eigen::VectorXd&)>& fn);

/// Forward map b_i = <rho_i, mu> + (kernel block) c.
Eigen::VectorXd measure_with_pwl(const std::vector<PwLinearFn>& rho,
                                 const Eigen::MatrixXd& kernel_cols,
                                 const DiscreteMeasure& mu,
                                 const Eigen::VectorXd& kernel_coeffs);

/// Vertex-value rows aligned to the mesh vertex order, one function per row.
void write_pwl_csv(const std::string& path, const std::vector<PwLinearFn>& fns);
std::vector<PwLinearFn> read_pwl_csv(const std::string& path,
                                     const std::shared_ptr<const SimplicialMesh>& mesh);

}  // namespace tvexact
