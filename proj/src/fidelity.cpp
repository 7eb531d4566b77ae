#include "tvexact/fidelity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvexact {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIndicatorTol = 1e-12;
}  // namespace

Fidelity Fidelity::equality_to(Eigen::VectorXd b) {
  Fidelity f;
  f.kind_ = Kind::EqualityTo;
  f.b_ = std::move(b);
  return f;
}

Fidelity Fidelity::quadratic(double lambda, Eigen::VectorXd c_diag, Eigen::VectorXd b) {
  if (lambda <= 0.0) throw std::invalid_argument("quadratic: lambda must be > 0");
  if (c_diag.size() != b.size())
    throw std::invalid_argument("quadratic: C diagonal length mismatch");
  if ((c_diag.array() <= 0.0).any())
    throw std::invalid_argument("quadratic: C must have positive diagonal");
  Fidelity f;
  f.kind_ = Kind::Quadratic;
  f.lambda_ = lambda;
  f.c_diag_ = std::move(c_diag);
  f.b_ = std::move(b);
  return f;
}

Fidelity Fidelity::quadratic(double lambda, Eigen::VectorXd b) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(b.size());
  return quadratic(lambda, std::move(ones), std::move(b));
}

Fidelity Fidelity::l1(double lambda, Eigen::VectorXd b) {
  if (lambda <= 0.0) throw std::invalid_argument("l1: lambda must be > 0");
  Fidelity f;
  f.kind_ = Kind::L1;
  f.lambda_ = lambda;
  f.b_ = std::move(b);
  return f;
}

Fidelity Fidelity::box_quant(Eigen::VectorXd c_diag, Eigen::VectorXd b) {
  if (c_diag.size() != b.size())
    throw std::invalid_argument("box_quant: C diagonal length mismatch");
  if ((c_diag.array() <= 0.0).any())
    throw std::invalid_argument("box_quant: C must have positive diagonal");
  Fidelity f;
  f.kind_ = Kind::BoxQuant;
  f.c_diag_ = std::move(c_diag);
  f.b_ = std::move(b);
  return f;
}

Fidelity Fidelity::phase_retrieval() {
  throw std::invalid_argument(
      "phase-retrieval fidelities are nonconvex and not supported by the "
      "numerical pipeline");
}

double Fidelity::eval(const Eigen::VectorXd& x) const {
  if (x.size() != b_.size()) throw std::invalid_argument("fidelity eval: length mismatch");
  switch (kind_) {
    case Kind::EqualityTo:
      return ((x - b_).lpNorm<Eigen::Infinity>() <= kIndicatorTol) ? 0.0 : kInf;
    case Kind::Quadratic:
      return 0.5 * lambda_ * ((x - b_).array() / c_diag_.array()).matrix().squaredNorm();
    case Kind::L1:
      return lambda_ * (x - b_).lpNorm<1>();
    case Kind::BoxQuant:
      return ((x - b_).array() * c_diag_.array()).abs().maxCoeff() <= 1.0 + kIndicatorTol
                 ? 0.0
                 : kInf;
  }
  return kInf;
}

double Fidelity::conjugate(const Eigen::VectorXd& q) const {
  if (q.size() != b_.size())
    throw std::invalid_argument("fidelity conjugate: length mismatch");
  const double qb = q.dot(b_);
  switch (kind_) {
    case Kind::EqualityTo:
      return qb;
    case Kind::Quadratic:
      return qb + (q.array() * c_diag_.array()).matrix().squaredNorm() / (2.0 * lambda_);
    case Kind::L1:
      return q.lpNorm<Eigen::Infinity>() <= lambda_ + kIndicatorTol ? qb : kInf;
    case Kind::BoxQuant:
      return qb + (q.array().abs() / c_diag_.array()).sum();
  }
  return kInf;
}

std::string Fidelity::kind_name() const {
  switch (kind_) {
    case Kind::EqualityTo: return "equality";
    case Kind::Quadratic: return "quadratic";
    case Kind::L1: return "l1";
    case Kind::BoxQuant: return "box";
  }
  return "?";
}

ConicEncodingInfo conic_encoding(const Fidelity& f) {
  ConicEncodingInfo info;
  const int m = f.m();
  switch (f.kind()) {
    case Fidelity::Kind::EqualityTo:
      info.zero_rows = m;
      break;
    case Fidelity::Kind::Quadratic:
      info.aux_vars = 1;  // epigraph variable w >= ||C^{-1}(x-b)||^2
      info.soc_dims.push_back(m + 2);
      break;
    case Fidelity::Kind::L1:
      info.aux_vars = 2 * m;  // x - b = p - n with p, n >= 0
      info.zero_rows = m;
      info.nonneg_rows = 2 * m;
      break;
    case Fidelity::Kind::BoxQuant:
      info.box_rows = m;  // -1 <= C(x-b) <= 1
      break;
  }
  return info;
}

}  // namespace tvexact
