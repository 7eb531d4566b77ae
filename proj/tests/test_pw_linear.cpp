#include <cmath>

#include "doctest.h"
#include "tvexact/operators.hpp"
#include "tvexact/pw_linear.hpp"
#include "tvexact/rng.hpp"

using namespace tvexact;

namespace {
std::shared_ptr<const SimplicialMesh> mesh1d(int cells) {
  return std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_1d(cells));
}
Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }
}  // namespace

TEST_CASE("uniform meshes") {
  auto m1 = SimplicialMesh::uniform_1d(4);
  CHECK(m1.vertices.size() == 5);
  CHECK(m1.cells.size() == 4);
  CHECK(m1.locate(v1(0.3)) == 1);
  CHECK(m1.locate(v1(1.2)) == -1);

  auto m2 = SimplicialMesh::uniform_grid_2d(3);
  CHECK(m2.vertices.size() == 16);
  CHECK(m2.cells.size() == 18);
  Eigen::VectorXd p(2);
  p << 0.51, 0.47;
  CHECK(m2.locate(p) >= 0);
  auto regions = m2.regions();
  CHECK(regions.size() == m2.cells.size());
  CHECK(regions[0].vertices.size() == 3);
}

TEST_CASE("mesh text round trip") {
  auto m = SimplicialMesh::uniform_grid_2d(2);
  m.save("mesh_roundtrip.txt");
  auto back = SimplicialMesh::load("mesh_roundtrip.txt");
  CHECK(back.dim == m.dim);
  REQUIRE(back.vertices.size() == m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((back.vertices[i] - m.vertices[i]).norm() == 0.0);
  CHECK(back.cells == m.cells);
}

TEST_CASE("eval_pwl") {
  auto mesh = mesh1d(2);
  Eigen::VectorXd hat(3);
  hat << 0, 1, 0;
  PwLinearFn f{mesh, hat};
  CHECK(f(0.25) == doctest::Approx(0.5));
  CHECK(f(0.5) == doctest::Approx(1.0));  // stored value exactly
  CHECK(f(1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(f(1.5), std::domain_error);

  // 2-D barycentric hand-check
  auto m2 = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_grid_2d(1));
  Eigen::VectorXd vals(4);  // vertex order (0,0),(0,1),(1,0),(1,1)
  vals << 0, 2, 1, 3;
  PwLinearFn g{m2, vals};
  Eigen::VectorXd p(2);
  p << 0.5, 0.25;
  CHECK(g(p) == doctest::Approx(1.0));
}

TEST_CASE("assemble_M") {
  auto mesh = mesh1d(2);
  Eigen::VectorXd hat(3);
  hat << 0, 1, 0;
  std::vector<PwLinearFn> rho = {PwLinearFn{mesh, hat}};

  // single node on a vertex picks the stored value
  Eigen::MatrixXd M = assemble_M(Eigen::MatrixXd(1, 0), rho, {v1(0.5)});
  CHECK(M.rows() == 1);
  CHECK(M.cols() == 1);
  CHECK(M(0, 0) == doctest::Approx(1.0));

  // kernel column: derivative with a == 2 integrates to 2
  auto D = RegularizerOp::derivative_1d();
  auto a = Pcw1DFunction::constant_pieces({0.0, 1.0}, {2.0});
  Eigen::MatrixXd kc = kernel_pairings(D, {a});
  CHECK(kc(0, 0) == doctest::Approx(2.0));
  Eigen::MatrixXd M2 = assemble_M(kc, rho, {v1(0.25), v1(0.75)});
  CHECK(M2.cols() == 3);
  CHECK(M2(0, 0) == doctest::Approx(2.0));
  CHECK(M2(0, 1) == doctest::Approx(0.5));
  CHECK(M2(0, 2) == doctest::Approx(0.5));

  // entrywise oracle on a 3 x 2 block
  Rng rng(5);
  std::vector<PwLinearFn> rr = random_pwl_measurements(mesh, 3, rng);
  std::vector<Eigen::VectorXd> nodes = {v1(0.1), v1(0.8)};
  Eigen::MatrixXd M3 = assemble_M(Eigen::MatrixXd(3, 0), rr, nodes);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(M3(i, j) == doctest::Approx(eval_pwl(rr[i], nodes[j])).epsilon(1e-14));
}

TEST_CASE("random_pwl_measurements") {
  auto mesh = mesh1d(10);
  Rng a(42), b(42), c(43);
  auto fa = random_pwl_measurements(mesh, 3, a);
  auto fb = random_pwl_measurements(mesh, 3, b);
  auto fc = random_pwl_measurements(mesh, 3, c);
  CHECK(fa[2].vertex_values == fb[2].vertex_values);  // same seed, same draw
  CHECK(fa[0].vertex_values != fc[0].vertex_values);
  Rng z(1);
  CHECK(random_pwl_measurements(mesh, 0, z).empty());

  // statistical oracle on 1e5 draws
  auto big = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_1d(99999));
  Rng s(7);
  auto fs = random_pwl_measurements(big, 1, s);
  double n = static_cast<double>(fs[0].vertex_values.size());
  double mean = fs[0].vertex_values.mean();
  double var = (fs[0].vertex_values.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("solve_vertex_primal on tiny instances") {
  auto mesh = mesh1d(2);
  Eigen::VectorXd hat(3);
  hat << 0, 1, 0;
  std::vector<PwLinearFn> rho = {PwLinearFn{mesh, hat}};
  Eigen::MatrixXd kc(1, 0);

  // the cheapest representation of b = 1 puts unit mass at the peak
  auto res = solve_vertex_primal(*mesh, rho, kc,
                                 Fidelity::equality_to(Eigen::VectorXd::Ones(1)));
  REQUIRE(res.info.status == SolveStatus::Optimal);
  CHECK(res.info.objective == doctest::Approx(1.0).epsilon(1e-8));
  REQUIRE(res.measure.size() == 1);
  CHECK(res.measure.atoms()[0].position(0) == 0.5);
  CHECK(res.measure.atoms()[0].weight == doctest::Approx(1.0).epsilon(1e-8));

  // zero data, zero measure
  auto res0 = solve_vertex_primal(*mesh, rho, kc,
                                  Fidelity::equality_to(Eigen::VectorXd::Zero(1)));
  CHECK(res0.measure.empty());
  CHECK(res0.info.objective == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("vertex primal/dual strong duality across fidelities") {
  Rng rng(314);
  auto mesh = mesh1d(10);
  const int m = 5;
  auto rho = random_pwl_measurements(mesh, m, rng);
  Eigen::MatrixXd kc(m, 0);
  DiscreteMeasure truth(1, {Atom(0.23, 0.8), Atom(0.71, -0.6)});
  Eigen::VectorXd b = measure_with_pwl(rho, kc, truth, Eigen::VectorXd(0));

  std::vector<Fidelity> fids = {
      Fidelity::equality_to(b), Fidelity::quadratic(100.0, b), Fidelity::l1(1.0, b),
      Fidelity::box_quant(Eigen::VectorXd::Constant(m, 50.0), b)};
  for (const Fidelity& f : fids) {
    CAPTURE(f.kind_name());
    auto p = solve_vertex_primal(*mesh, rho, kc, f);
    auto d = solve_vertex_dual(*mesh, rho, kc, f);
    REQUIRE(p.info.status == SolveStatus::Optimal);
    REQUIRE(d.info.status == SolveStatus::Optimal);
    CHECK(std::abs(p.info.objective - d.objective) <=
          1e-6 * (1.0 + std::abs(p.info.objective)));
    // every atom of the solution sits exactly on a mesh vertex
    for (const Atom& a : p.measure.atoms()) {
      double scaled = a.position(0) * 10.0;
      CHECK(std::abs(scaled - std::lround(scaled)) == 0.0);
    }
  }
}

TEST_CASE("equality primal solutions reproduce the measurements") {
  Rng rng(2718);
  auto mesh = mesh1d(20);
  const int m = 12;
  auto rho = random_pwl_measurements(mesh, m, rng);
  Eigen::MatrixXd kc(m, 0);
  DiscreteMeasure truth(1, {Atom(0.132, 1.0), Atom(0.514, -0.7), Atom(0.89, 0.4)});
  Eigen::VectorXd b = measure_with_pwl(rho, kc, truth, Eigen::VectorXd(0));

  auto res = solve_vertex_primal(*mesh, rho, kc, Fidelity::equality_to(b));
  REQUIRE(res.info.status == SolveStatus::Optimal);
  Eigen::VectorXd b_hat = measure_with_pwl(rho, kc, res.measure, res.kernel_coeffs);
  CHECK((b_hat - b).lpNorm<Eigen::Infinity>() <=
        1e-6 * (1.0 + b.lpNorm<Eigen::Infinity>()));

  // sparsification preserves measurements and the tv norm
  auto sparse = sparsify_solution(res.measure, *mesh, 1e-8);
  Eigen::VectorXd b_sparse = measure_with_pwl(rho, kc, sparse, res.kernel_coeffs);
  for (int i = 0; i < m; ++i)
    CHECK(b_sparse(i) == doctest::Approx(b_hat(i)).epsilon(1e-9));
  CHECK(tv_norm(sparse) == doctest::Approx(tv_norm(res.measure)).epsilon(1e-12));
  CHECK(sparse.size() <= res.measure.size());
}

TEST_CASE("two same-signed endpoint atoms collapse to one interior atom") {
  auto mesh = mesh1d(20);  // cells of width 0.05: [0.6, 0.65] is cell 12
  DiscreteMeasure mu(1, {Atom(0.6, -0.327), Atom(0.65, -0.673)});
  auto sparse = sparsify_solution(mu, *mesh, 1e-8);
  REQUIRE(sparse.size() == 1);
  double expect = (0.6 * 0.327 + 0.65 * 0.673) / (0.327 + 0.673);
  CHECK(sparse.atoms()[0].position(0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(sparse.atoms()[0].weight == doctest::Approx(-1.0).epsilon(1e-12));

  // isolated atoms of different signs stay separate
  DiscreteMeasure iso(1, {Atom(0.1, 1.0), Atom(0.3, -1.0)});
  CHECK(sparsify_solution(iso, *mesh, 1e-8).size() == 2);
}

TEST_CASE("2-D triangle with three same-signed vertex atoms merges to the barycenter") {
  auto mesh = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_grid_2d(2));
  const auto& cell = mesh->cells[0];
  std::vector<Atom> atoms;
  double ws[3] = {1.0, 2.0, 1.0};
  for (int k = 0; k < 3; ++k) atoms.emplace_back(mesh->vertices[cell[k]], ws[k]);
  DiscreteMeasure mu(2, atoms);
  auto sparse = sparsify_solution(mu, *mesh, 1e-8);
  REQUIRE(sparse.size() == 1);
  Eigen::VectorXd bary = (1.0 * mesh->vertices[cell[0]] + 2.0 * mesh->vertices[cell[1]] +
                          1.0 * mesh->vertices[cell[2]]) /
                         4.0;
  CHECK((sparse.atoms()[0].position - bary).norm() <= 1e-14);
  CHECK(sparse.atoms()[0].weight == doctest::Approx(4.0));

  // affine moments over the cell are preserved: pair against x and y
  for (int coord = 0; coord < 2; ++coord) {
    auto f = [coord](const Eigen::VectorXd& x) { return x(coord); };
    CHECK(pair(sparse, std::function<double(const Eigen::VectorXd&)>(f)) ==
          doctest::Approx(pair(mu, std::function<double(const Eigen::VectorXd&)>(f)))
              .epsilon(1e-12));
  }
}

TEST_CASE("linearize_on_mesh samples vertices exactly") {
  auto mesh = mesh1d(8);
  auto f = [](const Eigen::VectorXd& x) { return std::cos(2.0 * x(0)); };
  PwLinearFn g = linearize_on_mesh(mesh, f);
  for (const auto& v : mesh->vertices) CHECK(g(v) == doctest::Approx(f(v)));
  CHECK(std::abs(g(0.3) - std::cos(0.6)) <= 0.01);
}
