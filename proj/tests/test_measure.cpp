#include <cmath>

#include "doctest.h"
#include "tvexact/measure.hpp"
#include "tvexact/rng.hpp"

using namespace tvexact;

namespace {
DiscreteMeasure make1d(std::initializer_list<std::pair<double, double>> atoms) {
  std::vector<Atom> v;
  for (auto& [x, w] : atoms) v.emplace_back(x, w);
  return DiscreteMeasure(1, std::move(v));
}
}  // namespace

TEST_CASE("tv_norm") {
  CHECK(tv_norm(make1d({{0.3, 1.0}})) == doctest::Approx(1.0));
  CHECK(tv_norm(make1d({{0.1, 2.0}, {0.5, -3.0}})) == doctest::Approx(5.0));
  CHECK(tv_norm(DiscreteMeasure(1)) == 0.0);
}

TEST_CASE("pair with evaluable functions") {
  auto id = [](double x) { return x; };
  CHECK(pair(make1d({{0.2, 1.0}, {0.5, 2.0}}), std::function<double(double)>(id)) ==
        doctest::Approx(1.2));
  CHECK(pair(make1d({{0.4, 3.0}}), std::function<double(double)>([](double) {
              return 1.0;
            })) == doctest::Approx(3.0));
  // direct evaluation oracle: 1*0.25^2 - 1*0.75^2 = 0.0625 - 0.5625
  CHECK(pair(make1d({{0.25, 1.0}, {0.75, -1.0}}),
             std::function<double(double)>([](double x) { return x * x; })) ==
        doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("coalesce") {
  auto merged = coalesce(make1d({{0.3, 1.0}, {0.3, 2.0}}), 0.0);
  REQUIRE(merged.size() == 1);
  CHECK(merged.atoms()[0].position(0) == doctest::Approx(0.3));
  CHECK(merged.atoms()[0].weight == doctest::Approx(3.0));

  CHECK(coalesce(make1d({{0.3, 1.0}, {0.3, -1.0}}), 0.0).empty());

  auto near = coalesce(make1d({{0.30, 1.0}, {0.3000001, 1.0}}), 1e-5);
  REQUIRE(near.size() == 1);
  CHECK(near.atoms()[0].position(0) == doctest::Approx(0.30000005).epsilon(1e-12));
  CHECK(near.atoms()[0].weight == doctest::Approx(2.0));
}

TEST_CASE("coalesce is idempotent") {
  Rng rng(7);
  std::vector<Atom> atoms;
  for (int i = 0; i < 40; ++i) atoms.emplace_back(rng.uniform01(), rng.gaussian());
  DiscreteMeasure mu(1, atoms);
  auto once = coalesce(mu, 0.05);
  auto twice = coalesce(once, 0.05);
  REQUIRE(once.size() == twice.size());
  for (std::size_t k = 0; k < once.size(); ++k) {
    CHECK(once.atoms()[k].position(0) == twice.atoms()[k].position(0));
    CHECK(once.atoms()[k].weight == twice.atoms()[k].weight);
  }
}

TEST_CASE("merge_group barycenter formula") {
  Atom a = merge_group({Atom(0.2, 1.0), Atom(0.5, 2.0)});
  CHECK(a.position(0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(a.weight == doctest::Approx(3.0));

  Atom single = merge_group({Atom(0.7, 5.0)});
  CHECK(single.position(0) == doctest::Approx(0.7));
  CHECK(single.weight == doctest::Approx(5.0));

  // 2-D hand-checked barycenter
  Eigen::VectorXd p1(2), p2(2), p3(2);
  p1 << 0, 0;
  p2 << 1, 0;
  p3 << 0, 1;
  Atom m2 = merge_group({Atom(p1, 1.0), Atom(p2, 1.0), Atom(p3, 2.0)});
  CHECK(m2.weight == doctest::Approx(4.0));
  CHECK(m2.position(0) == doctest::Approx(0.25));
  CHECK(m2.position(1) == doctest::Approx(0.5));

  CHECK_THROWS_AS(merge_group({Atom(0.1, 1.0), Atom(0.2, -1.0)}), std::invalid_argument);
}

TEST_CASE("merge_group preserves moments to high relative accuracy") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Atom> g;
    int n = 2 + static_cast<int>(rng.below(6));
    double sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i)
      g.emplace_back(rng.uniform01(), sign * rng.uniform(1e-3, 1e3));
    Atom merged = merge_group(g);
    double w = 0.0, mx = 0.0;
    for (const Atom& a : g) {
      w += a.weight;
      mx += a.weight * a.position(0);
    }
    CHECK(merged.weight == doctest::Approx(w).epsilon(1e-12));
    CHECK(merged.weight * merged.position(0) == doctest::Approx(mx).epsilon(1e-12));
  }
}

TEST_CASE("sparsify_in_regions merges per cell and sign") {
  // 1-D mesh cells [0,0.05], [0.05,0.1], ...
  std::vector<Region> regions;
  for (int k = 0; k < 20; ++k) {
    Region r;
    r.id = k;
    r.vertices = {Eigen::VectorXd::Constant(1, 0.05 * k),
                  Eigen::VectorXd::Constant(1, 0.05 * (k + 1))};
    regions.push_back(r);
  }
  auto mu = make1d({{0.0, -0.4}, {0.05, -0.6}, {0.3, 1.0}});
  auto out = sparsify_in_regions(mu, regions, 1e-8);
  REQUIRE(out.size() == 2);
  // merged negative pair at the weighted mean (-0.4*0 - 0.6*0.05)/-1 = 0.03
  bool found_neg = false, found_pos = false;
  for (const Atom& a : out.atoms()) {
    if (a.weight < 0) {
      found_neg = true;
      CHECK(a.position(0) == doctest::Approx(0.03).epsilon(1e-12));
      CHECK(a.weight == doctest::Approx(-1.0));
    } else {
      found_pos = true;
      CHECK(a.position(0) == doctest::Approx(0.3));
    }
  }
  CHECK(found_neg);
  CHECK(found_pos);

  // single atoms in distinct regions stay unchanged
  auto lone = sparsify_in_regions(make1d({{0.12, 1.0}, {0.52, -2.0}}), regions, 1e-8);
  CHECK(lone.size() == 2);

  // moment preservation for functions affine on each region: pairing with
  // x -> x and x -> 1 is preserved, tv too
  double before1 = pair(mu, std::function<double(double)>([](double x) { return x; }));
  double after1 = pair(out, std::function<double(double)>([](double x) { return x; }));
  CHECK(after1 == doctest::Approx(before1).epsilon(1e-10));
  CHECK(tv_norm(out) == doctest::Approx(tv_norm(mu)).epsilon(1e-12));
}

TEST_CASE("sparsify_in_regions: the six-peak configuration collapses to three") {
  // three triangles, two same-signed atoms in each
  std::vector<Region> regions;
  auto tri = [](int id, double ox, double oy) {
    Region r;
    r.id = id;
    Eigen::VectorXd a(2), b(2), c(2);
    a << ox, oy;
    b << ox + 1, oy;
    c << ox, oy + 1;
    r.vertices = {a, b, c};
    return r;
  };
  regions.push_back(tri(0, 0, 0));
  regions.push_back(tri(1, 2, 0));
  regions.push_back(tri(2, 4, 0));
  std::vector<Atom> atoms;
  auto at = [](double x, double y, double w) {
    Eigen::VectorXd p(2);
    p << x, y;
    return Atom(p, w);
  };
  atoms.push_back(at(0.1, 0.1, 1.0));
  atoms.push_back(at(0.3, 0.2, 0.5));
  atoms.push_back(at(2.1, 0.1, -1.0));
  atoms.push_back(at(2.2, 0.3, -0.25));
  atoms.push_back(at(4.1, 0.1, 2.0));
  atoms.push_back(at(4.2, 0.5, 1.0));
  DiscreteMeasure mu(2, atoms);
  auto out = sparsify_in_regions(mu, regions, 1e-8);
  CHECK(out.size() == 3);
  CHECK(tv_norm(out) == doctest::Approx(tv_norm(mu)).epsilon(1e-12));
}

TEST_CASE("sparsify_in_regions rejects atoms outside every region") {
  std::vector<Region> regions(1);
  regions[0].id = 0;
  regions[0].vertices = {Eigen::VectorXd::Constant(1, 0.0),
                         Eigen::VectorXd::Constant(1, 0.5)};
  CHECK_THROWS_AS(sparsify_in_regions(make1d({{0.8, 1.0}}), regions, 1e-8),
                  std::runtime_error);
  // below-threshold atoms are dropped before the assignment check
  CHECK(sparsify_in_regions(make1d({{0.8, 1e-12}}), regions, 1e-8).empty());
}

TEST_CASE("purify_support basic examples") {
  // G = [1 1 1], u = (1/3, 1/3, 1/3) -> 1-sparse with unit entry
  Eigen::MatrixXd G(1, 3);
  G << 1, 1, 1;
  Eigen::VectorXd b(1);
  b << 1;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  auto res = purify_support(G, b, u);
  CHECK(res.support_size <= 1);
  CHECK((G * res.u - b).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(res.u.lpNorm<1>() == doctest::Approx(1.0).epsilon(1e-9));

  // already sparse input returned unchanged
  Eigen::VectorXd sparse(3);
  sparse << 0, 1, 0;
  auto res2 = purify_support(G, b, sparse);
  CHECK(res2.u == sparse);

  // 2x3 instance: enumerate basic solutions shows ||u'||_1 <= 1.5 possible
  Eigen::MatrixXd G2(2, 3);
  G2 << 1, 0, 1, 0, 1, 1;
  Eigen::VectorXd b2(2);
  b2 << 1, 1;
  Eigen::VectorXd u2 = Eigen::VectorXd::Constant(3, 0.5);
  auto res3 = purify_support(G2, b2, u2);
  CHECK(res3.support_size <= 2);
  CHECK((G2 * res3.u - b2).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(res3.u.lpNorm<1>() <= 1.5 + 1e-9);
}

TEST_CASE("purify_support random LP instances keep objective and residual") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    int m = 4, n = 20;
    Eigen::MatrixXd G(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = rng.gaussian();
    Eigen::VectorXd u(n);
    for (int j = 0; j < n; ++j) u(j) = rng.gaussian();
    Eigen::VectorXd b = G * u;
    auto res = purify_support(G, b, u);
    CHECK(res.support_size <= m);
    CHECK((G * res.u - b).lpNorm<Eigen::Infinity>() <=
          1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>()));
    CHECK(res.u.lpNorm<1>() <= u.lpNorm<1>() + 1e-9);
  }
}

TEST_CASE("atoms csv round trip") {
  auto mu = make1d({{0.123456789012345, 1.5}, {0.9, -2.25}});
  std::stringstream ss;
  write_atoms_csv(ss, mu);
  auto back = read_atoms_csv(ss);
  REQUIRE(back.size() == mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    CHECK(back.atoms()[k].position(0) == mu.atoms()[k].position(0));
    CHECK(back.atoms()[k].weight == mu.atoms()[k].weight);
  }
}
