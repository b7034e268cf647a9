#include "doctest.h"
#include "support.hpp"

#include "kahlerlab/error.hpp"
#include "kahlerlab/functionals.hpp"
#include "kahlerlab/spectral.hpp"

using namespace kltest;

TEST_CASE("Nash-Yau entropy") {
  const auto d = unit_torus(1, 16);
  const auto ref = build_flat_torus(d, true);
  CHECK(nash_yau_entropy(ref, ref, 2.0) == 0.0);
  CHECK(nash_yau_entropy(scale_metric(ref, 5.0), ref, 2.0) < 1e-40);

  // pinch family: closed form on the grid
  const auto m = build_family_member({0.1, FamilyKind::kPotentialPinch}, d, 1);
  double expect = 0.0;
  for (Eigen::Index i = 0; i < m.relative_density.size(); ++i) {
    const double ef = m.relative_density(i);
    expect += std::pow(std::abs(std::log(ef)), 3.0) * ef * ref.volume_density(i) * d.cell_volume();
  }
  CHECK(nash_yau_entropy(m, ref, 3.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(nash_yau_entropy(scale_metric(m, 0.25), ref, 3.0) == doctest::Approx(expect).epsilon(1e-12));

  const auto rec = admissibility_record(m, ref, 3.0, 4.0, 10.0);
  CHECK(rec.p == 3.0);
  CHECK(rec.within_cap());
  CHECK(rec.gamma_min > 0.0);
}

TEST_CASE("Sobolev quotient of phi_1 in closed form") {
  const auto op = flat_operator(1, 32);
  ScalarField u(static_cast<Eigen::Index>(op.size()));
  for (NodeId i = 0; i < op.size(); ++i) u(static_cast<Eigen::Index>(i)) = std::sqrt(2.0) * std::cos(2 * kPi * op.domain.position(i, 0));
  const double q = 4.0 / 3.0;
  const auto v = sobolev_quotient(op, u, q, 1.0, 1.0);
  REQUIRE(v.has_value());
  // mean of |sqrt2 cos|^{2q} on the uniform grid, energy = lambda_1^h
  double m = 0.0;
  for (int j = 0; j < 32; ++j) m += std::pow(std::abs(std::sqrt(2.0) * std::cos(2 * kPi * j / 32.0)), 2 * q) / 32.0;
  const double h = 1.0 / 32;
  const double lam = 0.25 * std::pow(2.0 * std::sin(kPi * h) / h, 2);
  CHECK(v->lhs == doctest::Approx(std::pow(m, 1.0 / q)).epsilon(1e-12));
  CHECK(v->rhs == doctest::Approx(lam).epsilon(1e-12));
  CHECK_FALSE(sobolev_quotient(op, ScalarField::Constant(1024, 3.0), q, 1.0, 1.0).has_value());
}

TEST_CASE("Sobolev quotients are scale invariant") {
  const auto m = build_family_member({0.1, FamilyKind::kPotentialPinch}, unit_torus(1, 16), 1);
  const auto ref = build_flat_torus(m.domain, true);
  const auto a = assemble_laplacian(m);
  const auto b = assemble_laplacian(scale_metric(m, 2.0));
  FieldGen gen(13);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarField u = gen.smooth(m.domain, 3, 4);
    const auto qa = sobolev_quotient(a, u, 4.0 / 3.0, intersection_number(m, ref), a.volume);
    const auto qb = sobolev_quotient(b, u, 4.0 / 3.0, 2.0 * intersection_number(m, ref), b.volume);
    CHECK(qa->ratio() == doctest::Approx(qb->ratio()).epsilon(1e-10));
  }
}

TEST_CASE("improved Sobolev") {
  const auto op = flat_operator(2, 5);
  FieldGen gen(2);
  const ScalarField u = gen.smooth(op.domain, 2, 4);
  CHECK(improved_sobolev_quotient(op, u, 1.0, 1.0, 1.0).has_value());
  CHECK(improved_sobolev_quotient(op, u, 1.0, 1.8, 1.0).has_value());
  CHECK_THROWS_AS((void)improved_sobolev_quotient(op, u, 1.0, 2.0, 1.0), Error);
  CHECK_THROWS_AS((void)improved_sobolev_quotient(op, u, 2.0, 2.5, 1.0), Error);
  CHECK_THROWS_AS((void)improved_sobolev_quotient(flat_operator(1, 8), ScalarField::Ones(64), 1.0, 1.0, 1.0), Error);
  CHECK_FALSE(improved_sobolev_quotient(op, ScalarField::Ones(625), 1.0, 1.5, 1.0).has_value());
  // with p' = 1 and q' = q the two quotients are the same formula
  const auto a = improved_sobolev_quotient(op, u, 1.0, 4.0 / 3.0, 1.0);
  const auto b = sobolev_quotient(op, u, 4.0 / 3.0, 1.0, 1.0);
  CHECK(a->ratio() == doctest::Approx(b->ratio()).epsilon(1e-12));
}

TEST_CASE("battery is deterministic") {
  const auto d = unit_torus(1, 16);
  const auto a = sobolev_battery(d, 12, 42);
  const auto b = sobolev_battery(d, 12, 42);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  const auto c = sobolev_battery(d, 12, 43);
  CHECK((a[0] - c[0]).norm() > 0.0);
}

TEST_CASE("flat geodesics") {
  const auto op = flat_operator(1, 32);
  const std::vector<NodeId> src = {0};
  // A^{-1} length doubles Euclidean length; half-diagonal of the unit square
  const double diam = geodesic_diameter(op, src);
  CHECK(diam == doctest::Approx(std::sqrt(2.0)).epsilon(0.03));
  const auto dist = geodesic_distances(op, 0);
  CHECK(dist[op.domain.shift(0, 0, 1)] == doctest::Approx(2.0 / 32).epsilon(1e-12));

  FieldGen gen(17);
  std::vector<std::vector<double>> rows;
  std::vector<NodeId> seeds;
  for (int i = 0; i < 10; ++i) {
    seeds.push_back(gen.node(op.domain));
    rows.push_back(geodesic_distances(op, seeds.back()));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const int a = gen.integer(0, 9), b = gen.integer(0, 9);
    const NodeId z = gen.node(op.domain);
    CHECK(rows[a][seeds[b]] <= rows[a][z] + rows[b][z] + 1e-12);
  }
}

TEST_CASE("fiber distances shrink like sqrt(t)") {
  const auto d = unit_torus(2, 6);
  const NodeId far = d.shift(0, 0, 3);
  double prev_ratio = 0.0;
  for (double t : {1.0, 0.25, 0.0625}) {
    const auto op = assemble_laplacian(build_degenerating_product_family({t, FamilyKind::kProductCollapse}, d, 1));
    const double r = geodesic_distances(op, 0)[far] / std::sqrt(t);
    if (prev_ratio > 0.0) CHECK(r == doctest::Approx(prev_ratio).epsilon(1e-12));
    prev_ratio = r;
  }
}

TEST_CASE("ball geometry") {
  const auto op = flat_operator(1, 16);
  std::vector<double> radii;
  for (int j = 1; j <= 20; ++j) radii.push_back(0.08 * j);
  const auto g = geodesic_geometry(op, 3, radii);
  for (std::size_t j = 1; j < radii.size(); ++j) CHECK(g.ball_volumes[j] >= g.ball_volumes[j - 1]);
  CHECK(g.ball_volume(radii.back()) == doctest::Approx(1.0).epsilon(1e-13));
  const std::vector<BallGeometry> balls = {g};
  const auto r = noncollapsing_check(balls, 4.0 / 3.0, 1.0);
  CHECK(r.fitted_constant > 0.0);
  CHECK(r.kind == CheckKind::kFloor);
}

TEST_CASE("Poincare gap on the flat torus") {
  const auto op = flat_operator(1, 16);
  const auto s = eigendecompose(op, 256, 1e-10);
  CHECK(poincare_gap(s, 1.0) == doctest::Approx(s.eigenvalues(1)));
  const auto s2 = eigendecompose(assemble_laplacian(scale_metric(build_flat_torus(op.domain, true), 3.0)), 20, 1e-10);
  CHECK(poincare_gap(s2, 3.0) == doctest::Approx(poincare_gap(s, 1.0)).epsilon(1e-10));
}

TEST_CASE("spread nodes") {
  const auto d = unit_torus(1, 8);
  const auto a = spread_nodes(d, 10, 1);
  CHECK(a == spread_nodes(d, 10, 1));
  std::vector<NodeId> s = a;
  std::sort(s.begin(), s.end());
  CHECK(std::unique(s.begin(), s.end()) == s.end());
}
