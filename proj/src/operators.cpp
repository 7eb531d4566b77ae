#include "tvexact/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvexact {

namespace {
double wrap01(double t) {
  double r = t - std::floor(t);
  return r == 1.0 ? 0.0 : r;
}
}  // namespace

RegularizerOp RegularizerOp::identity(int dim, Eigen::MatrixXd domain_box) {
  if (dim < 1) throw std::invalid_argument("identity: dim must be >= 1");
  if (domain_box.rows() != dim || domain_box.cols() != 2)
    throw std::invalid_argument("identity: domain box must be d x 2");
  RegularizerOp op;
  op.kind_ = OpKind::Identity;
  op.dim_ = dim;
  op.domain_box_ = std::move(domain_box);
  return op;
}

RegularizerOp RegularizerOp::identity_unit(int dim) {
  Eigen::MatrixXd box(dim, 2);
  box.col(0).setZero();
  box.col(1).setOnes();
  return identity(dim, box);
}

RegularizerOp RegularizerOp::derivative_1d(bool torus) {
  RegularizerOp op;
  op.kind_ = OpKind::Derivative1D;
  op.dim_ = 1;
  op.torus_ = torus;
  op.domain_box_ = Eigen::MatrixXd(1, 2);
  op.domain_box_ << 0.0, 1.0;
  return op;
}

bool RegularizerOp::in_domain(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim_) return false;
  if (torus_) return true;  // wrapped coordinates
  for (int j = 0; j < dim_; ++j)
    if (x(j) < domain_box_(j, 0) - tol || x(j) > domain_box_(j, 1) + tol)
      return false;
  return true;
}

std::vector<std::function<double(const Eigen::VectorXd&)>> kernel_basis(
    const RegularizerOp& L) {
  std::vector<std::function<double(const Eigen::VectorXd&)>> basis;
  if (L.kind() == OpKind::Derivative1D)
    basis.emplace_back([](const Eigen::VectorXd&) { return 1.0; });
  return basis;
}

PinvDelta::PinvDelta(const RegularizerOp& L, const Eigen::VectorXd& x) : x_(x) {
  if (!L.in_domain(x))
    throw std::domain_error("pinv_delta: point outside the operator domain");
  symbolic_ = (L.kind() == OpKind::Identity);
  torus_ = L.torus();
  if (!symbolic_ && torus_) x_(0) = wrap01(x_(0));
}

double PinvDelta::operator()(double s) const {
  if (symbolic_)
    throw std::domain_error("pinv_delta: delta_x has no pointwise value under Identity");
  const double x = x_(0);
  if (torus_) {
    // Zero-mean sawtooth G_x with D G_x = delta_x - Lebesgue.
    double t = wrap01(s);
    return (t >= x ? 1.0 : 0.0) - t + x - 0.5;
  }
  return (s >= x ? 1.0 : 0.0) - (1.0 - x);
}

double PinvDelta::pair_with(
    const std::function<double(const Eigen::VectorXd&)>& f) const {
  if (!symbolic_)
    throw std::domain_error("pinv_delta: pair_with applies to the symbolic case");
  return f(x_);
}

PinvDelta pinv_delta(const RegularizerOp& L, const Eigen::VectorXd& x) {
  return PinvDelta(L, x);
}

PinvDelta pinv_delta(const RegularizerOp& L, double x) {
  return PinvDelta(L, Eigen::VectorXd::Constant(1, x));
}

Pcw1DFunction Pcw1DFunction::constant_pieces(std::vector<double> breakpoints,
                                             std::vector<double> values) {
  if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
    throw std::invalid_argument("piecewise-constant: need one value per piece");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
      std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
    throw std::invalid_argument("breakpoints must be strictly increasing");
  Pcw1DFunction f;
  f.pcw_constant_ = true;
  f.breaks_ = std::move(breakpoints);
  f.values_ = std::move(values);
  return f;
}

Pcw1DFunction Pcw1DFunction::linear(std::vector<double> breakpoints,
                                    std::vector<double> values) {
  if (breakpoints.size() < 2 || values.size() != breakpoints.size())
    throw std::invalid_argument("piecewise-linear: need one value per breakpoint");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
      std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
    throw std::invalid_argument("breakpoints must be strictly increasing");
  Pcw1DFunction f;
  f.pcw_constant_ = false;
  f.breaks_ = std::move(breakpoints);
  f.values_ = std::move(values);
  return f;
}

double Pcw1DFunction::operator()(double t) const {
  if (t < breaks_.front() - 1e-12 || t > breaks_.back() + 1e-12)
    throw std::domain_error("Pcw1DFunction: point outside [first, last] breakpoint");
  t = std::clamp(t, breaks_.front(), breaks_.back());
  // piece index: right-continuous, last piece closed on the right
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  int k = static_cast<int>(it - breaks_.begin()) - 1;
  k = std::clamp(k, 0, static_cast<int>(breaks_.size()) - 2);
  if (pcw_constant_) return values_[k];
  double w = (t - breaks_[k]) / (breaks_[k + 1] - breaks_[k]);
  return (1.0 - w) * values_[k] + w * values_[k + 1];
}

double Pcw1DFunction::integral() const {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < breaks_.size(); ++k) {
    double len = breaks_[k + 1] - breaks_[k];
    s += pcw_constant_ ? values_[k] * len
                       : 0.5 * (values_[k] + values_[k + 1]) * len;
  }
  return s;
}

Pcw1DFunction pinv_adjoint(const RegularizerOp& L, const Pcw1DFunction& a) {
  if (L.kind() == OpKind::Identity) return a;
  if (!a.piecewise_constant())
    throw std::invalid_argument(
        "pinv_adjoint: closed form requires piecewise-constant input; use the "
        "quadrature overload otherwise");
  const auto& bp = a.breakpoints();
  if (std::abs(bp.front()) > 1e-12 || std::abs(bp.back() - 1.0) > 1e-12)
    throw std::invalid_argument("pinv_adjoint: breakpoints must cover [0,1]");
  const double mean = a.integral();
  std::vector<double> vals(bp.size(), 0.0);
  for (std::size_t k = 0; k + 1 < bp.size(); ++k)
    vals[k + 1] = vals[k] + (mean - a.values()[k]) * (bp[k + 1] - bp[k]);
  vals.back() = 0.0;  // exact zero: the increments sum to zero analytically
  return Pcw1DFunction::linear(bp, std::move(vals));
}

namespace {
// 32-node Gauss-Legendre rule on [-1,1], computed once by Newton iteration on
// the Legendre polynomial.
struct GaussLegendre32 {
  double node[32], weight[32];
  GaussLegendre32() {
    const int n = 32;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      node[i] = -x;
      node[n - 1 - i] = x;
      weight[i] = weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
  }
};
const GaussLegendre32& gl32() {
  static const GaussLegendre32 rule;
  return rule;
}

double integrate_gl(const std::function<double(double)>& f, double lo, double hi,
                    int pieces) {
  const auto& rule = gl32();
  double s = 0.0;
  double h = (hi - lo) / pieces;
  for (int p = 0; p < pieces; ++p) {
    double a = lo + p * h, c = a + 0.5 * h;
    for (int i = 0; i < 32; ++i) s += rule.weight[i] * f(c + 0.5 * h * rule.node[i]);
  }
  return s * 0.5 * h;
}
}  // namespace

std::function<double(double)> pinv_adjoint_quadrature(
    const RegularizerOp& L, const std::function<double(double)>& a, int pieces) {
  if (L.kind() == OpKind::Identity) return a;
  const double mean = integrate_gl(a, 0.0, 1.0, pieces);
  return [a, mean, pieces](double s) {
    if (s <= 0.0) return 0.0;
    int sub = std::max(1, static_cast<int>(std::ceil(s * pieces)));
    return mean * s - integrate_gl(a, 0.0, s, sub);
  };
}

Eigen::MatrixXd kernel_pairings(const RegularizerOp& L,
                                const std::vector<Pcw1DFunction>& a_list) {
  Eigen::MatrixXd out(static_cast<int>(a_list.size()), L.kernel_dim());
  if (L.kernel_dim() == 0) return out;
  for (std::size_t i = 0; i < a_list.size(); ++i) out(static_cast<int>(i), 0) = a_list[i].integral();
  return out;
}

EvaluableSignal reconstruct(const RegularizerOp& L, const DiscreteMeasure& mu,
                            const Eigen::VectorXd& kernel_coeffs) {
  if (kernel_coeffs.size() != L.kernel_dim())
    throw std::invalid_argument("reconstruct: kernel coefficient count mismatch");
  if (mu.dim() != L.dim())
    throw std::invalid_argument("reconstruct: measure dimension mismatch");
  for (const Atom& a : mu.atoms())
    if (!L.in_domain(a.position))
      throw std::domain_error("reconstruct: atom outside the operator domain");
  return EvaluableSignal{kernel_coeffs, mu};
}

double eval_signal(const EvaluableSignal& sig, const RegularizerOp& L, double s) {
  if (L.kind() == OpKind::Identity)
    throw std::domain_error("eval_signal: Identity signals are measures");
  double v = sig.kernel_coeffs.size() > 0 ? sig.kernel_coeffs(0) : 0.0;
  for (const Atom& a : sig.measure.atoms())
    v += a.weight * PinvDelta(L, a.position)(s);
  return v;
}

}  // namespace tvexact
