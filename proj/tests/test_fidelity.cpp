#include <cmath>
#include <limits>

#include "doctest.h"
#include "tvexact/fidelity.hpp"
#include "tvexact/rng.hpp"

using namespace tvexact;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Concave objective <q,x> - f(x) maximized by nested grid refinement over the
// fidelity's finite domain; soundness rests on concavity in each coordinate.
double grid_conjugate(const Fidelity& f, const Eigen::VectorXd& q) {
  const int m = f.m();
  Eigen::VectorXd lo(m), hi(m);
  switch (f.kind()) {
    case Fidelity::Kind::EqualityTo:
      return q.dot(f.b());
    case Fidelity::Kind::BoxQuant:
      for (int i = 0; i < m; ++i) {
        lo(i) = f.b()(i) - 1.0 / f.c_diag()(i);
        hi(i) = f.b()(i) + 1.0 / f.c_diag()(i);
      }
      break;
    default:
      lo.setConstant(-1000.0);
      hi.setConstant(1000.0);
  }
  const int pts = 81;
  double best = -kInf;
  Eigen::VectorXd best_x = 0.5 * (lo + hi);
  for (int level = 0; level < 6; ++level) {
    best = -kInf;
    Eigen::VectorXd x(m), cand = best_x;
    if (m == 1) {
      for (int i = 0; i < pts; ++i) {
        x(0) = lo(0) + (hi(0) - lo(0)) * i / (pts - 1);
        double v = q.dot(x) - f.eval(x);
        if (v > best) {
          best = v;
          cand = x;
        }
      }
    } else {
      for (int i = 0; i < pts; ++i)
        for (int j = 0; j < pts; ++j) {
          x(0) = lo(0) + (hi(0) - lo(0)) * i / (pts - 1);
          x(1) = lo(1) + (hi(1) - lo(1)) * j / (pts - 1);
          double v = q.dot(x) - f.eval(x);
          if (v > best) {
            best = v;
            cand = x;
          }
        }
    }
    best_x = cand;
    Eigen::VectorXd half = (hi - lo) / (pts - 1) * 4.0;
    lo = best_x - half;
    hi = best_x + half;
  }
  return best;
}

}  // namespace

TEST_CASE("fidelity eval") {
  auto eq = Fidelity::equality_to(vec2(1, 2));
  CHECK(eq.eval(vec2(1, 2)) == 0.0);
  CHECK(eq.eval(vec2(1, 2.5)) == kInf);

  auto quad = Fidelity::quadratic(2.0, Eigen::VectorXd::Zero(2));
  CHECK(quad.eval(vec2(3, 4)) == doctest::Approx(25.0));

  auto l1 = Fidelity::l1(1.0, vec2(1, 1));
  CHECK(l1.eval(vec2(2, 0)) == doctest::Approx(2.0));

  auto box = Fidelity::box_quant(vec2(2, 2), Eigen::VectorXd::Zero(2));
  CHECK(box.eval(vec2(0.4, -0.5)) == 0.0);
  CHECK(box.eval(vec2(0.6, 0.0)) == kInf);
}

TEST_CASE("fidelity construction guards") {
  CHECK_THROWS_AS(Fidelity::quadratic(-1.0, Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(Fidelity::box_quant(vec2(1, -1), Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(Fidelity::phase_retrieval(), std::invalid_argument);
}

TEST_CASE("conjugate closed forms") {
  auto eq = Fidelity::equality_to(vec2(1, 2));
  CHECK(eq.conjugate(vec2(3, 4)) == doctest::Approx(11.0));

  auto quad = Fidelity::quadratic(100.0, Eigen::VectorXd::Zero(2));
  CHECK(quad.conjugate(vec2(10, 0)) == doctest::Approx(0.5));

  auto l1 = Fidelity::l1(1.0, Eigen::VectorXd::Zero(2));
  CHECK(l1.conjugate(vec2(0.5, -0.5)) == 0.0);
  CHECK(l1.conjugate(vec2(1.5, 0.0)) == kInf);

  auto box = Fidelity::box_quant(vec2(2, 4), Eigen::VectorXd::Zero(2));
  CHECK(box.conjugate(vec2(2, 4)) == doctest::Approx(2.0));
}

TEST_CASE("conjugates match the grid-maximization oracle") {
  Rng rng(99);
  for (int m = 1; m <= 2; ++m) {
    Eigen::VectorXd b(m), c(m);
    for (int i = 0; i < m; ++i) {
      b(i) = rng.uniform(-2, 2);
      c(i) = rng.uniform(0.5, 3.0);
    }
    std::vector<Fidelity> fids = {
        Fidelity::equality_to(b), Fidelity::quadratic(100.0, c, b),
        Fidelity::l1(1.0, b), Fidelity::box_quant(c, b)};
    for (const Fidelity& f : fids) {
      for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd q(m);
        for (int i = 0; i < m; ++i) q(i) = rng.uniform(-2.0, 2.0);
        if (f.kind() == Fidelity::Kind::L1 && q.lpNorm<Eigen::Infinity>() > 0.95)
          q *= 0.9 / q.lpNorm<Eigen::Infinity>();  // keep inside dom f*
        double exact = f.conjugate(q);
        double oracle = grid_conjugate(f, q);
        CHECK(exact == doctest::Approx(oracle).epsilon(1e-3).scale(1.0 + std::abs(exact)));
      }
    }
  }
}

TEST_CASE("l1 conjugate is +inf outside the dual box (oracle grows past any bound)") {
  auto l1 = Fidelity::l1(1.0, Eigen::VectorXd::Zero(1));
  Eigen::VectorXd q(1);
  q << 1.5;
  CHECK(l1.conjugate(q) == kInf);
  double oracle = grid_conjugate(l1, q);
  CHECK(oracle > 100.0);  // grid over |x| <= 1000 detects the blow-up
}

TEST_CASE("Fenchel-Young with equality at matched pairs") {
  Rng rng(123);
  Eigen::VectorXd b = vec2(0.3, -0.7), c = vec2(2.0, 0.5);
  auto quad = Fidelity::quadratic(10.0, c, b);
  auto box = Fidelity::box_quant(c, b);
  auto l1 = Fidelity::l1(2.0, b);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd q = vec2(rng.gaussian(), rng.gaussian());
    Eigen::VectorXd x = vec2(rng.gaussian(), rng.gaussian());
    for (const Fidelity& f : {quad, box, l1}) {
      double lhs = f.eval(x) + f.conjugate(q);
      if (std::isfinite(lhs)) CHECK(lhs >= q.dot(x) - 1e-9);
    }
    // quadratic equality at x = b + C^2 q / lambda
    Eigen::VectorXd xq = b + (c.array().square() * q.array()).matrix() / 10.0;
    CHECK(quad.eval(xq) + quad.conjugate(q) ==
          doctest::Approx(q.dot(xq)).epsilon(1e-9));
    // box equality at x = b + C^{-1} sign(q)
    Eigen::VectorXd xb = b;
    for (int i = 0; i < 2; ++i) xb(i) += (q(i) >= 0 ? 1.0 : -1.0) / c(i);
    CHECK(box.eval(xb) + box.conjugate(q) == doctest::Approx(q.dot(xb)).epsilon(1e-9));
  }
}

TEST_CASE("conic encoding shapes") {
  auto eq = Fidelity::equality_to(Eigen::VectorXd::Zero(3));
  auto e1 = conic_encoding(eq);
  CHECK(e1.zero_rows == 3);
  CHECK(e1.aux_vars == 0);

  auto l1 = Fidelity::l1(1.0, Eigen::VectorXd::Zero(2));
  auto e2 = conic_encoding(l1);
  CHECK(e2.aux_vars == 4);
  CHECK(e2.zero_rows == 2);

  auto quad = Fidelity::quadratic(1.0, Eigen::VectorXd::Zero(2));
  auto e3 = conic_encoding(quad);
  REQUIRE(e3.soc_dims.size() == 1);
  CHECK(e3.soc_dims[0] == 4);
}
