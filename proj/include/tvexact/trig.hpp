#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "tvexact/conic.hpp"
#include "tvexact/fidelity.hpp"
#include "tvexact/measure.hpp"
#include "tvexact/rng.hpp"

namespace tvexact {

/// Real-valued trigonometric polynomial t -> sum_{j=-K}^{K} c_j e^{-2 pi i j t}
/// with Hermitian coefficients c_{-j} = conj(c_j); symmetry is checked at
/// construction (tolerance 1e-12) and then enforced exactly.
class TrigPoly {
 public:
  TrigPoly() = default;
  /// coeffs indexed j = -K..K at position j + K.
  TrigPoly(int K, Eigen::VectorXcd coeffs);

  int degree() const { return K_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  std::complex<double> coeff(int j) const { return coeffs_(j + K_); }

  double eval(double t) const;          // throws if the imaginary residual is large
  std::complex<double> eval_complex(double t) const;
  double deriv1(double t) const;        // d/dt |.|^2 helpers use these
  std::complex<double> eval_deriv(double t, int order) const;

 private:
  int K_ = 0;
  Eigen::VectorXcd coeffs_ = Eigen::VectorXcd::Zero(1);
};

double eval_trig(const TrigPoly& p, double t);

/// Coefficients gamma_{j,i} of the measurement functions rho_i, rows
/// j = -K..K, columns i = 1..m, column-wise Hermitian in j.
struct GammaMatrix {
  int K = 0;
  int m = 0;
  Eigen::MatrixXcd entries;  // (2K+1) x m

  GammaMatrix() = default;
  GammaMatrix(int K, Eigen::MatrixXcd entries);

  TrigPoly column(int i) const;
  void save_csv(const std::string& path) const;  // interleaved re/im
  static GammaMatrix load_csv(const std::string& path);
};

/// Canonical real Fourier family: 1, cos(2 pi j t), sin(2 pi j t) for
/// j = 1..K, giving m = 2K+1 measurements.
GammaMatrix fourier_gamma(int K);

/// Random family with 1/max(j,1) coefficient decay: gamma_{0,i} real
/// standard normal; for j > 0 real and imaginary parts standard normal,
/// scaled by 1/j; Hermitian completion for j < 0.
GammaMatrix random_decay_gamma(int K, int m, Rng& rng);

/// Kernel data for the dual and the refit: rows <a_i, lambda_k> (r x m), plus
/// whether the operator range forces zero-mean atomic parts (derivative on
/// the torus).
struct TrigKernelData {
  Eigen::MatrixXd rows;  // r x m
  bool zero_mean_atoms = false;

  static TrigKernelData none(int m) { return {Eigen::MatrixXd(0, m), false}; }
};

/// eta = sum_i q_i rho_i, i.e. the polynomial with coefficients Gamma q.
TrigPoly certificate_poly(const Eigen::VectorXd& q, const GammaMatrix& gamma);

struct TrigDualProgram {
  ConicProblem problem;
  int q_offset = 0;
  int m = 0;
  int psd_side_complex = 0;  // 2K+2
};

/// Dual semidefinite program: maximize -f_b*(q) subject to
/// ||sum q_i rho_i||_inf <= 1, written with a Hermitian matrix Q through the
/// bounded-real certificate [[Q, Gamma q], [(Gamma q)*, 1]] psd with unit
/// diagonal sum and vanishing superdiagonal sums, plus <q, A lambda_k> = 0
/// for each kernel row. The complex block is real-embedded.
TrigDualProgram assemble_dual_sdp(const GammaMatrix& gamma,
                                  const TrigKernelData& kernel, const Fidelity& f);

struct TrigDualResult {
  Eigen::VectorXd q;
  double objective = 0.0;  // value of sup -f*
  ConicSolution conic;
};

TrigDualResult solve_dual_sdp(const GammaMatrix& gamma, const TrigKernelData& kernel,
                              const Fidelity& f, const SolverSettings& settings = {});

struct CertificateRoots {
  std::vector<double> positions;  // sorted in [0,1)
  std::vector<double> moduli;     // |eta(t_k)|
};

/// Roots of |eta| = 1 on the torus: forms g = 1 - eta conj(eta), takes the
/// degree-4K algebraic polynomial z^{2K} g(z), computes its roots as
/// eigenvalues of the balanced companion matrix, keeps near-unit-modulus
/// roots, clusters double roots, Newton-polishes the cluster centers on
/// |eta|^2 and keeps positions with |eta| >= 1 - root_tol_value. Throws a
/// runtime error when |eta| is identically 1 (continuum certificate).
CertificateRoots find_unit_modulus_roots(const TrigPoly& eta,
                                         double root_tol_radius = 1e-6,
                                         double root_tol_value = 1e-6,
                                         double cluster_radius = 1e-5,
                                         bool polish = true);

struct RefitResult {
  DiscreteMeasure measure;
  Eigen::VectorXd kernel_coeffs;
  double objective = 0.0;
  ConicSolution conic;
};

/// Finite primal at fixed positions: min f_b(M [c; d]) + ||d||_1 with
/// M = [ <a_i, lambda_k> | rho_i(x_j) ]. For EqualityTo, b is first projected
/// onto the span of M when its least-squares residual is below
/// 1e-6 (1 + ||b||), keeping the program feasible under root-extraction
/// noise. Atoms below 1e-8 are dropped.
RefitResult refit_primal(const std::vector<double>& positions,
                         const GammaMatrix& gamma, const TrigKernelData& kernel,
                         const Fidelity& f, const SolverSettings& settings = {});

/// Forward map b_i = sum_k d_k rho_i(x_k) + sum_k <a_i, lambda_k> c_k.
Eigen::VectorXd measure_with_trig(const DiscreteMeasure& mu,
                                  const Eigen::VectorXd& kernel_coeffs,
                                  const GammaMatrix& gamma,
                                  const TrigKernelData& kernel);

/// For the derivative on the torus: coefficients of rho = (L^+)* a from the
/// coefficients of a (division by 2 pi i j; the mean component maps to zero).
Eigen::VectorXcd derivative_torus_a_to_rho(const Eigen::VectorXcd& a_coeffs);

}  // namespace tvexact
