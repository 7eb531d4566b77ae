#include <cmath>
#include <complex>

#include "doctest.h"
#include "tvexact/fidelity.hpp"
#include "tvexact/trig.hpp"
#include "tvexact/rng.hpp"

using namespace tvexact;
using cd = std::complex<double>;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

TrigPoly cosine_poly() {
  Eigen::VectorXcd c(3);
  c << 0.5, 0.0, 0.5;
  return TrigPoly(1, c);
}
}  // namespace

TEST_CASE("eval_trig basics") {
  Eigen::VectorXcd c0(1);
  c0 << 1.0;
  TrigPoly one(0, c0);
  CHECK(one.eval(0.13) == doctest::Approx(1.0));

  TrigPoly cosp = cosine_poly();
  CHECK(cosp.eval(0.0) == doctest::Approx(1.0));
  CHECK(cosp.eval(0.25) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosp.eval(0.5) == doctest::Approx(-1.0));

  // random Hermitian coefficients against an independent summation order
  Rng rng(8);
  int K = 7;
  Eigen::VectorXcd c(2 * K + 1);
  c(K) = rng.gaussian();
  for (int j = 1; j <= K; ++j) {
    c(K + j) = cd(rng.gaussian(), rng.gaussian());
    c(K - j) = std::conj(c(K + j));
  }
  TrigPoly p(K, c);
  for (int g = 0; g < 100; ++g) {
    double t = g / 100.0;
    cd s = 0.0;
    for (int j = K; j >= -K; --j)  // reversed order
      s += c(j + K) * std::exp(cd(0.0, -kTwoPi * j * t));
    CHECK(p.eval(t) == doctest::Approx(s.real()).epsilon(1e-12));
  }
}

TEST_CASE("TrigPoly rejects broken Hermitian symmetry") {
  Eigen::VectorXcd c(3);
  c << cd(0.5, 0.2), 0.0, cd(0.5, 0.2);  // conj mismatch
  CHECK_THROWS_AS(TrigPoly(1, c), std::invalid_argument);
}

TEST_CASE("gamma matrices") {
  GammaMatrix f = fourier_gamma(2);
  CHECK(f.m == 5);
  // column 1 is cos(2 pi t), column 2 is sin(2 pi t)
  CHECK(f.column(1).eval(0.2) == doctest::Approx(std::cos(kTwoPi * 0.2)));
  CHECK(f.column(2).eval(0.2) == doctest::Approx(std::sin(kTwoPi * 0.2)));
  CHECK(f.column(0).eval(0.9) == doctest::Approx(1.0));

  Rng rng(3);
  GammaMatrix g = random_decay_gamma(6, 4, rng);
  g.save_csv("gamma_roundtrip.csv");
  GammaMatrix back = GammaMatrix::load_csv("gamma_roundtrip.csv");
  CHECK(back.K == g.K);
  CHECK(back.m == g.m);
  CHECK((back.entries - g.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("certificate_poly is the coefficient map") {
  Rng rng(4);
  GammaMatrix g = random_decay_gamma(5, 3, rng);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  CHECK((certificate_poly(e1, g).coeffs() - g.entries.col(0)).cwiseAbs().maxCoeff() <=
        1e-15);
  CHECK(certificate_poly(Eigen::VectorXd::Zero(3), g).coeffs().cwiseAbs().maxCoeff() ==
        0.0);
  Eigen::VectorXd q1(3), q2(3);
  for (int i = 0; i < 3; ++i) {
    q1(i) = rng.gaussian();
    q2(i) = rng.gaussian();
  }
  Eigen::VectorXcd lin = certificate_poly(q1 + q2, g).coeffs() -
                         certificate_poly(q1, g).coeffs() -
                         certificate_poly(q2, g).coeffs();
  CHECK(lin.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("find_unit_modulus_roots on cos(2 pi t)") {
  auto roots = find_unit_modulus_roots(cosine_poly());
  REQUIRE(roots.positions.size() == 2);
  CHECK(roots.positions[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(roots.positions[1] == doctest::Approx(0.5).epsilon(1e-9));
  // grid-scan oracle: every near-unit grid point is near a returned root
  for (int g = 0; g < 100000; ++g) {
    double t = g / 100000.0;
    if (std::abs(std::cos(kTwoPi * t)) >= 1.0 - 1e-7) {
      double dist = 1.0;
      for (double r : roots.positions) {
        double d = std::abs(t - r);
        dist = std::min(dist, std::min(d, 1.0 - d));
      }
      CHECK(dist <= 1e-4);
    }
  }
}

TEST_CASE("find_unit_modulus_roots edge cases") {
  // small certificate: no unit-modulus points
  Eigen::VectorXcd c(3);
  c << 0.25, 0.0, 0.25;
  CHECK(find_unit_modulus_roots(TrigPoly(1, c)).positions.empty());

  // constant of modulus one: continuum certificate
  Eigen::VectorXcd one(1);
  one << 1.0;
  CHECK_THROWS_AS(find_unit_modulus_roots(TrigPoly(0, one)), std::runtime_error);

  // infeasible certificate violates the precondition
  Eigen::VectorXcd big(3);
  big << 1.0, 0.5, 1.0;
  CHECK_THROWS_AS(find_unit_modulus_roots(TrigPoly(1, big)), std::invalid_argument);
}

TEST_CASE("root count stays within twice the degree") {
  Rng rng(12);
  int K = 6;
  // feasible certificate: scaled random polynomial
  Eigen::VectorXcd c(2 * K + 1);
  c(K) = rng.gaussian();
  for (int j = 1; j <= K; ++j) {
    c(K + j) = cd(rng.gaussian(), rng.gaussian()) / (1.0 + j);
    c(K - j) = std::conj(c(K + j));
  }
  TrigPoly raw(K, c);
  double mx = 0.0;
  for (int g = 0; g < 4096; ++g) mx = std::max(mx, std::abs(raw.eval(g / 4096.0)));
  TrigPoly eta(K, Eigen::VectorXcd(c / mx));  // now max |eta| == 1 at the grid max
  auto roots = find_unit_modulus_roots(eta, 1e-3, 1e-5);
  CHECK(roots.positions.size() <= 2 * static_cast<std::size_t>(K));
  for (double m : roots.moduli) CHECK(m >= 1.0 - 1e-5);
}

TEST_CASE("assemble_dual_sdp: K=0, m=1 reduces to |q| <= 1") {
  GammaMatrix g(0, Eigen::MatrixXcd::Ones(1, 1));
  // maximize -q*b with b = -1: pushes q to its certificate bound 1
  Eigen::VectorXd b(1);
  b << -1.0;
  auto res = solve_dual_sdp(g, TrigKernelData::none(1), Fidelity::equality_to(b));
  REQUIRE(res.conic.status == SolveStatus::Optimal);
  CHECK(res.q(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-7));

  // with b = 0 the optimum is 0
  auto res0 = solve_dual_sdp(g, TrigKernelData::none(1),
                             Fidelity::equality_to(Eigen::VectorXd::Zero(1)));
  CHECK(res0.objective == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("assemble_dual_sdp dimensions") {
  Rng rng(7);
  GammaMatrix g = random_decay_gamma(3, 4, rng);
  auto prog = assemble_dual_sdp(g, TrigKernelData::none(4),
                                Fidelity::equality_to(Eigen::VectorXd::Zero(4)));
  CHECK(prog.psd_side_complex == 2 * 3 + 2);
  bool found = false;
  for (const auto& cone : prog.problem.cones)
    if (cone.kind == ConeSpec::Kind::PsdReal) {
      found = true;
      CHECK(cone.psd_side == 4 * 3 + 4);  // real embedding doubles the side
    }
  CHECK(found);
}

TEST_CASE("kernel rows force <q, A lambda> = 0") {
  Rng rng(21);
  GammaMatrix g = random_decay_gamma(4, 3, rng);
  Eigen::MatrixXd rows(1, 3);
  rows << 1.0, 1.0, 0.0;
  TrigKernelData kernel{rows, false};
  Eigen::VectorXd b(3);
  b << 1.0, -0.5, 0.25;
  auto res = solve_dual_sdp(g, kernel, Fidelity::equality_to(b));
  REQUIRE(res.conic.status == SolveStatus::Optimal);
  CHECK(std::abs(res.q(0) + res.q(1)) <= 1e-7);
}

TEST_CASE("single-spike dual route is exact") {
  const int K = 8;
  const double x0 = 0.337, d = 0.8;
  GammaMatrix g = fourier_gamma(K);
  DiscreteMeasure truth(1, {Atom(x0, d)});
  Eigen::VectorXd b = measure_with_trig(truth, Eigen::VectorXd(0), g,
                                        TrigKernelData::none(g.m));

  auto dual = solve_dual_sdp(g, TrigKernelData::none(g.m), Fidelity::equality_to(b));
  REQUIRE(dual.conic.status == SolveStatus::Optimal);
  CHECK(dual.objective == doctest::Approx(d).epsilon(1e-6));

  TrigPoly eta = certificate_poly(-dual.q, g);
  double mx = 0.0;
  for (int i = 0; i < 10000; ++i)
    mx = std::max(mx, std::abs(eta.eval_complex(i / 10000.0)));
  CHECK(mx <= 1.0 + 1e-6);

  auto roots = find_unit_modulus_roots(eta, 1e-3, 1e-6);
  REQUIRE(roots.positions.size() >= 1);
  double best = 1.0;
  for (double r : roots.positions) best = std::min(best, std::abs(r - x0));
  CHECK(best <= 1e-7);

  auto refit = refit_primal(roots.positions, g, TrigKernelData::none(g.m),
                            Fidelity::equality_to(b));
  REQUIRE(refit.measure.size() == 1);
  CHECK(refit.measure.atoms()[0].position(0) == doctest::Approx(x0).epsilon(1e-7));
  CHECK(refit.measure.atoms()[0].weight == doctest::Approx(d).epsilon(1e-7));
  // strong duality between the refit and the dual
  CHECK(std::abs(refit.objective - dual.objective) <=
        1e-6 * (1.0 + std::abs(dual.objective)));
}

TEST_CASE("refit_primal building blocks") {
  GammaMatrix g = fourier_gamma(3);
  // empty position set with zero data gives the zero measure
  auto empty = refit_primal({}, g, TrigKernelData::none(g.m),
                            Fidelity::equality_to(Eigen::VectorXd::Zero(g.m)));
  CHECK(empty.measure.empty());
  CHECK(empty.objective == 0.0);

  // single known position: the equality system is solvable and recovers d
  double x0 = 0.41, d = -1.7;
  DiscreteMeasure truth(1, {Atom(x0, d)});
  Eigen::VectorXd b = measure_with_trig(truth, Eigen::VectorXd(0), g,
                                        TrigKernelData::none(g.m));
  auto refit = refit_primal({x0}, g, TrigKernelData::none(g.m),
                            Fidelity::equality_to(b));
  REQUIRE(refit.measure.size() == 1);
  CHECK(refit.measure.atoms()[0].weight == doctest::Approx(d).epsilon(1e-8));

  CHECK_THROWS_AS(refit_primal({0.2, 0.2}, g, TrigKernelData::none(g.m),
                               Fidelity::equality_to(b)),
                  std::invalid_argument);
}

TEST_CASE("measure_with_trig") {
  GammaMatrix g = fourier_gamma(2);
  DiscreteMeasure delta0(1, {Atom(0.0, 1.0)});
  Eigen::VectorXd b = measure_with_trig(delta0, Eigen::VectorXd(0), g,
                                        TrigKernelData::none(g.m));
  CHECK(b(0) == doctest::Approx(1.0));  // constant
  CHECK(b(1) == doctest::Approx(1.0));  // cos at 0
  CHECK(b(2) == doctest::Approx(0.0).epsilon(1e-14));  // sin at 0

  Rng rng(5);
  DiscreteMeasure mu1(1, {Atom(rng.uniform01(), rng.gaussian())});
  DiscreteMeasure mu2(1, {Atom(rng.uniform01(), rng.gaussian())});
  std::vector<Atom> both = mu1.atoms();
  both.push_back(mu2.atoms()[0]);
  DiscreteMeasure sum(1, both);
  Eigen::VectorXd lin =
      measure_with_trig(sum, Eigen::VectorXd(0), g, TrigKernelData::none(g.m)) -
      measure_with_trig(mu1, Eigen::VectorXd(0), g, TrigKernelData::none(g.m)) -
      measure_with_trig(mu2, Eigen::VectorXd(0), g, TrigKernelData::none(g.m));
  CHECK(lin.lpNorm<Eigen::Infinity>() <= 1e-14);

  // agrees with the pairing against eval
  for (int i = 0; i < g.m; ++i) {
    TrigPoly rho = g.column(i);
    double via_pair = pair(sum, std::function<double(double)>(
                                    [&rho](double t) { return rho.eval(t); }));
    CHECK(measure_with_trig(sum, Eigen::VectorXd(0), g,
                            TrigKernelData::none(g.m))(i) ==
          doctest::Approx(via_pair).epsilon(1e-12));
  }
}

TEST_CASE("derivative on the torus: a to rho coefficient map") {
  // a = cos(2 pi t): rho should pair with delta_x like <a, L+ delta_x>
  Eigen::VectorXcd a(3);
  a << 0.5, 0.0, 0.5;
  Eigen::VectorXcd rho_c = derivative_torus_a_to_rho(a);
  TrigPoly rho(1, rho_c);
  // oracle: <a, G_x> with G_x the zero-mean sawtooth, via fine quadrature
  for (double x : {0.2, 0.55, 0.9}) {
    double acc = 0.0;
    int n = 200000;
    for (int i = 0; i < n; ++i) {
      double s = (i + 0.5) / n;
      double gx = ((s >= x) ? 1.0 : 0.0) - s + x - 0.5;
      acc += std::cos(kTwoPi * s) * gx;
    }
    acc /= n;
    CHECK(rho.eval(x) == doctest::Approx(acc).epsilon(1e-7));
  }
  // rho of the constant part vanishes
  Eigen::VectorXcd a0(1);
  a0 << 2.0;
  CHECK(derivative_torus_a_to_rho(a0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("torus-derivative trig route recovers a zero-mean jump pair") {
  const int K = 6;
  GammaMatrix a_gamma = fourier_gamma(K);
  // rho = (L+)* a columnwise
  Eigen::MatrixXcd rho_entries(2 * K + 1, a_gamma.m);
  for (int i = 0; i < a_gamma.m; ++i)
    rho_entries.col(i) = derivative_torus_a_to_rho(a_gamma.entries.col(i));
  GammaMatrix rho(K, rho_entries);
  Eigen::MatrixXd kernel_rows(1, a_gamma.m);
  for (int i = 0; i < a_gamma.m; ++i)
    kernel_rows(0, i) = a_gamma.entries(K, i).real();  // <a_i, 1> = mean coeff
  TrigKernelData kernel{kernel_rows, true};

  // staircase with jumps +1 at 0.3 and -1 at 0.7, offset 0.25
  DiscreteMeasure jumps(1, {Atom(0.3, 1.0), Atom(0.7, -1.0)});
  Eigen::VectorXd c(1);
  c << 0.25;
  Eigen::VectorXd b = measure_with_trig(jumps, c, rho, kernel);

  auto dual = solve_dual_sdp(rho, kernel, Fidelity::equality_to(b));
  REQUIRE(dual.conic.status == SolveStatus::Optimal);
  CHECK(std::abs(dual.q.dot(kernel_rows.row(0))) <= 1e-7);

  TrigPoly eta = certificate_poly(-dual.q, rho);
  auto roots = find_unit_modulus_roots(eta, 1e-3, 1e-6);
  auto refit = refit_primal(roots.positions, rho, kernel, Fidelity::equality_to(b));
  REQUIRE(refit.measure.size() == 2);
  double total = 0.0;
  for (const Atom& atom : refit.measure.atoms()) total += atom.weight;
  CHECK(std::abs(total) <= 1e-7);  // range of D on the torus is zero-mean
  CHECK(refit.kernel_coeffs(0) == doctest::Approx(0.25).epsilon(1e-6));
  for (const Atom& atom : refit.measure.atoms()) {
    double d0 = std::abs(atom.position(0) - 0.3);
    double d1 = std::abs(atom.position(0) - 0.7);
    CHECK(std::min(d0, d1) <= 1e-6);
  }
}
