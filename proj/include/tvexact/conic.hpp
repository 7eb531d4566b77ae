#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <string>
#include <vector>

namespace tvexact {

/// Cone blocks for the constraint slacks. PsdReal(s) is a real symmetric
/// s x s block in scaled-lower-triangle vectorization (column-major lower
/// triangle, off-diagonal entries scaled by sqrt(2) so the Euclidean inner
/// product matches the Frobenius one).
struct ConeSpec {
  enum class Kind { Zero, NonNeg, Box, SecondOrder, PsdReal };
  Kind kind = Kind::Zero;
  int dim = 0;        // number of rows; for PsdReal this is s(s+1)/2
  int psd_side = 0;   // s for PsdReal, else 0
  double lo = 0.0;    // Box only
  double hi = 0.0;    // Box only

  static ConeSpec zero(int k) { return {Kind::Zero, k, 0, 0.0, 0.0}; }
  static ConeSpec nonneg(int k) { return {Kind::NonNeg, k, 0, 0.0, 0.0}; }
  static ConeSpec box(int k, double lo, double hi) { return {Kind::Box, k, 0, lo, hi}; }
  static ConeSpec second_order(int k) { return {Kind::SecondOrder, k, 0, 0.0, 0.0}; }
  static ConeSpec psd_real(int side) {
    return {Kind::PsdReal, side * (side + 1) / 2, side, 0.0, 0.0};
  }
};

/// min c'x + (1/2) x' diag(quad_diag) x  s.t.  A x + s = b,  s in K.
/// quad_diag is an optional nonnegative diagonal quadratic term (empty means
/// a plain linear objective); it folds into the cached KKT factorization, so
/// separable quadratics avoid badly scaled epigraph variables.
struct ConicProblem {
  int n_vars = 0;
  Eigen::VectorXd cost;
  Eigen::VectorXd quad_diag;  // empty or length n_vars, entries >= 0
  std::vector<Eigen::Triplet<double>> triplets;  // rows grouped by cone order
  Eigen::VectorXd rhs;
  std::vector<ConeSpec> cones;

  int n_rows() const { return static_cast<int>(rhs.size()); }
  bool has_quad() const { return quad_diag.size() > 0; }
  void validate() const;  // throws on structural errors
};

enum class SolveStatus { Optimal, MaxIter, InfeasibleFlagged };

struct ConicSolution {
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // dual (in K* for cone rows)
  Eigen::VectorXd s;  // slack, in K
  SolveStatus status = SolveStatus::MaxIter;
  double primal_residual = 0.0;  // ||Ax + s - b||_inf
  double dual_residual = 0.0;    // ||A'y + c||_inf
  double gap = 0.0;              // c'x + b'y (support-corrected on Box rows)
  double objective = 0.0;        // c'x
  int iterations = 0;
};

struct SolverSettings {
  double eps_abs = 1e-9;
  double eps_rel = 1e-9;
  int max_iter = 200000;
  double relaxation = 1.8;  // over-relaxation alpha in [1, 2)
  double rho = 1.0;         // ADMM penalty; adapted by residual balancing
  bool adaptive_rho = true;
  double sigma = 1e-6;      // proximal regularization on x
  int check_interval = 25;
  bool polish = true;  // active-set refinement when only Zero/NonNeg/Box rows
  bool verbose = false;
};

/// Euclidean projection onto one cone block.
Eigen::VectorXd project_cone(const ConeSpec& cone,
                             const Eigen::Ref<const Eigen::VectorXd>& v);

/// Operator-splitting (ADMM) solve: alternates a cached quasi-definite KKT
/// solve, a cone projection, and a dual update, with over-relaxation and
/// residual-balancing penalty adaptation every 100 iterations.
ConicSolution solve(const ConicProblem& p, const SolverSettings& settings = {});

/// Scaled-lower-triangle vectorization helpers for symmetric matrices.
Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd unsvec(const Eigen::Ref<const Eigen::VectorXd>& v, int side);
int svec_index(int i, int j, int side);  // requires i >= j

/// Real embedding [[Re, -Im], [Im, Re]] of a complex Hermitian matrix;
/// H psd iff the embedding is psd, with each eigenvalue doubled in
/// multiplicity. Inner products carry a factor 2: <H1,H2>_F(real part) =
/// kHermitianTraceScale * <E1,E2>_F. Throws on non-Hermitian input.
Eigen::MatrixXd hermitian_embed(const Eigen::MatrixXcd& H, double tol = 1e-12);
inline constexpr double kHermitianTraceScale = 0.5;

/// Plain-text round-trip format: first line "n_vars n_rows n_cones", then the
/// objective, the triplet count and triplets "row col value", the rhs, and
/// one cone per line "KIND dim [lo hi]" (PSD lines carry the matrix side).
/// All reals printed with 17 significant digits.
void write_problem(std::ostream& os, const ConicProblem& p);
void write_problem(const std::string& path, const ConicProblem& p);
ConicProblem read_problem(std::istream& is);
ConicProblem read_problem(const std::string& path);

/// Incremental assembly helper shared by the problem builders.
class ProblemBuilder {
 public:
  int add_vars(int k, double cost_each = 0.0);
  void add_cost(int var, double w);
  void add_quad(int var, double p);  // + (p/2) x_var^2
  /// Begin a cone block; rows are appended in order. Returns first row index.
  int begin_block(ConeSpec cone);
  void set_entry(int row, int var, double value);  // accumulates
  void set_rhs(int row, double value);
  int n_vars() const { return n_vars_; }
  int n_rows() const { return n_rows_; }
  ConicProblem build() const;

 private:
  int n_vars_ = 0;
  int n_rows_ = 0;
  std::vector<double> cost_;
  std::vector<double> quad_;
  std::vector<double> rhs_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<ConeSpec> cones_;
};

}  // namespace tvexact
