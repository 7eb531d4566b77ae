#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "tvexact/measure.hpp"

namespace tvexact {

enum class OpKind { Identity, Derivative1D };

/// The regularizing operator L: Identity on measures over a box in R^d, or
/// the distributional derivative on ]0,1[ (optionally on the torus, where the
/// range is restricted to zero-mean measures).
class RegularizerOp {
 public:
  static RegularizerOp identity(int dim, Eigen::MatrixXd domain_box);
  static RegularizerOp identity_unit(int dim);  // box [0,1]^d
  static RegularizerOp derivative_1d(bool torus = false);

  OpKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool torus() const { return torus_; }
  int kernel_dim() const { return kind_ == OpKind::Identity ? 0 : 1; }
  const Eigen::MatrixXd& domain_box() const { return domain_box_; }  // d x 2
  bool in_domain(const Eigen::VectorXd& x, double tol = 1e-12) const;

 private:
  OpKind kind_ = OpKind::Identity;
  int dim_ = 1;
  bool torus_ = false;
  Eigen::MatrixXd domain_box_;
};

/// Basis of ker L as evaluable functions: empty for Identity, the constant
/// function for the derivative.
std::vector<std::function<double(const Eigen::VectorXd&)>> kernel_basis(
    const RegularizerOp& L);

/// Value of L^+ delta_x. For the derivative this is the zero-mean shifted
/// step s -> 1_{s>=x} - (1-x) (interval) or the zero-mean sawtooth (torus).
/// For Identity it stays the symbolic atom delta_x, usable through pairing
/// only.
class PinvDelta {
 public:
  PinvDelta(const RegularizerOp& L, const Eigen::VectorXd& x);

  bool symbolic() const { return symbolic_; }
  /// Pointwise value; throws for the symbolic (Identity) case.
  double operator()(double s) const;
  double pair_with(const std::function<double(const Eigen::VectorXd&)>& f) const;

 private:
  bool symbolic_ = false;
  bool torus_ = false;
  Eigen::VectorXd x_;
};

PinvDelta pinv_delta(const RegularizerOp& L, const Eigen::VectorXd& x);
PinvDelta pinv_delta(const RegularizerOp& L, double x);

/// Piecewise function on [0,1]: either constant per piece (values.size() ==
/// breakpoints.size()-1, right-continuous) or linear between breakpoints
/// (values.size() == breakpoints.size()).
class Pcw1DFunction {
 public:
  static Pcw1DFunction constant_pieces(std::vector<double> breakpoints,
                                       std::vector<double> values);
  static Pcw1DFunction linear(std::vector<double> breakpoints,
                              std::vector<double> values);

  bool piecewise_constant() const { return pcw_constant_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double t) const;
  double integral() const;  // closed form over [0,1]

 private:
  bool pcw_constant_ = true;
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// rho = (L^+)* a. Identity: rho == a. Derivative on ]0,1[: rho(s) =
/// int_0^s (mean(a) - a); exact piecewise-linear output for piecewise-constant
/// input, with rho(0) = rho(1) = 0 by construction.
Pcw1DFunction pinv_adjoint(const RegularizerOp& L, const Pcw1DFunction& a);

/// Quadrature fallback for arbitrary integrable a on [0,1] (composite
/// 32-node Gauss-Legendre per piece of the supplied grid); approximate.
std::function<double(double)> pinv_adjoint_quadrature(
    const RegularizerOp& L, const std::function<double(double)>& a,
    int pieces = 64);

/// <a_i, lambda_k> for the kernel basis; for the derivative with
/// piecewise-constant a this is the exact integral of a_i. Returns an
/// m x kernel_dim matrix.
Eigen::MatrixXd kernel_pairings(const RegularizerOp& L,
                                const std::vector<Pcw1DFunction>& a_list);

/// u = u_K + sum_k d_k L^+ delta_{x_k}: kernel coefficients plus the atoms of
/// L u. For the derivative this is a right-continuous staircase.
struct EvaluableSignal {
  Eigen::VectorXd kernel_coeffs;
  DiscreteMeasure measure;
};

EvaluableSignal reconstruct(const RegularizerOp& L, const DiscreteMeasure& mu,
                            const Eigen::VectorXd& kernel_coeffs);

/// Pointwise value of the signal (derivative variants only; Identity signals
/// are measures and have no pointwise values). Right-limit convention at
/// jumps.
double eval_signal(const EvaluableSignal& sig, const RegularizerOp& L, double s);

}  // namespace tvexact
