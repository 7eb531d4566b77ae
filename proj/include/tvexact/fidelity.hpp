#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tvexact {

/// Data-fit terms f_b and their convex conjugates.
///   EqualityTo:  f(x) = 0 if x == b else +inf
///   Quadratic:   f(x) = (lambda/2) ||C^{-1}(x - b)||_2^2, C diagonal > 0
///   L1:          f(x) = lambda ||x - b||_1
///   BoxQuant:    f(x) = 0 if ||C(x - b)||_inf <= 1 else +inf
class Fidelity {
 public:
  enum class Kind { EqualityTo, Quadratic, L1, BoxQuant };

  static Fidelity equality_to(Eigen::VectorXd b);
  static Fidelity quadratic(double lambda, Eigen::VectorXd c_diag, Eigen::VectorXd b);
  static Fidelity quadratic(double lambda, Eigen::VectorXd b);  // C = Id
  static Fidelity l1(double lambda, Eigen::VectorXd b);
  static Fidelity box_quant(Eigen::VectorXd c_diag, Eigen::VectorXd b);
  /// Always throws: the numerical pipeline assumes a convex fidelity.
  static Fidelity phase_retrieval();

  Kind kind() const { return kind_; }
  int m() const { return static_cast<int>(b_.size()); }
  const Eigen::VectorXd& b() const { return b_; }
  double lambda() const { return lambda_; }
  const Eigen::VectorXd& c_diag() const { return c_diag_; }

  /// f_b(x); +inf where an indicator is violated.
  double eval(const Eigen::VectorXd& x) const;
  /// f_b*(q) = sup_x <q,x> - f_b(x).
  double conjugate(const Eigen::VectorXd& q) const;

  std::string kind_name() const;

 private:
  Kind kind_ = Kind::EqualityTo;
  Eigen::VectorXd b_;
  double lambda_ = 1.0;
  Eigen::VectorXd c_diag_;
};

/// Shape summary of the epigraph encoding used by the conic assemblers:
/// auxiliary variable count, equality rows, and cone blocks (dimensions
/// only). EqualityTo -> zero cone on x - b; Quadratic -> one second-order
/// cone (rotated form, dim m+2); L1 -> nonnegative splitting with m equality
/// rows; BoxQuant -> box rows on C(x - b).
struct ConicEncodingInfo {
  int aux_vars = 0;
  int zero_rows = 0;
  int nonneg_rows = 0;
  int box_rows = 0;
  std::vector<int> soc_dims;
};

ConicEncodingInfo conic_encoding(const Fidelity& f);

}  // namespace tvexact
