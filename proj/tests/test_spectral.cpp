#include "doctest.h"
#include "support.hpp"

#include <sstream>

#include "kahlerlab/error.hpp"
#include "kahlerlab/spectral.hpp"

using namespace kltest;

namespace {

const SpectralData& flat16() {
  static const SpectralData s = [] {
    const auto op = flat_operator(1, 16);
    return eigendecompose(op, 256, 1e-10);
  }();
  return s;
}

}  // namespace

TEST_CASE("dense spectrum matches the exact lattice symbol") {
  const auto& s = flat16();
  const FlatDft dft{unit_torus(1, 16)};
  const auto exact = dft.sorted_eigenvalues();
  for (int k = 0; k < s.count(); ++k) CHECK(s.eigenvalues(k) == doctest::Approx(exact[static_cast<std::size_t>(k)]).epsilon(1e-10));
  CHECK(s.eigenvalues(0) == 0.0);
  CHECK(s.complete());
  CHECK((s.eigenfunctions.col(0).array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(s.residuals.maxCoeff() < 1e-9);
}

TEST_CASE("mass orthonormality") {
  const auto& s = flat16();
  const Eigen::MatrixXd g = s.eigenfunctions.transpose() * s.mass.asDiagonal() * s.eigenfunctions;
  CHECK((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("iterative solver agrees with the dense path") {
  const auto op = assemble_laplacian(build_family_member({0.3, FamilyKind::kPotentialPinch}, unit_torus(1, 24), 1));
  const auto dense = eigendecompose(op, 30, 1e-10);
  EigenOptions it;
  it.force_iterative = true;
  const auto iter = eigendecompose(op, 30, 1e-10, it);
  for (int k = 0; k < 30; ++k) CHECK(iter.eigenvalues(k) == doctest::Approx(dense.eigenvalues(k)).epsilon(1e-8));
  CHECK_FALSE(iter.complete());
  CHECK((iter.remainder.array() >= -1e-9).all());
}

TEST_CASE("first eigenvalues on the flat 64^2 torus") {
  const auto op = flat_operator(1, 64);
  EigenOptions it;
  it.force_iterative = true;
  const auto s = eigendecompose(op, 5, 1e-10, it);
  for (int k = 1; k < 5; ++k) CHECK(s.eigenvalues(k) == doctest::Approx(kPi * kPi).epsilon(5e-3));
}

TEST_CASE("scaled metric halves the spectrum") {
  const auto m = build_family_member({0.3, FamilyKind::kPotentialPinch}, unit_torus(1, 12), 1);
  const auto a = eigendecompose(assemble_laplacian(m), 20, 1e-10);
  const auto b = eigendecompose(assemble_laplacian(scale_metric(m, 2.0)), 20, 1e-10);
  for (int k = 1; k < 20; ++k) CHECK(b.eigenvalues(k) == doctest::Approx(0.5 * a.eigenvalues(k)).epsilon(1e-9));
}

TEST_CASE("product family spectrum separates") {
  // on the t-product the fiber and base factors contribute symbols 1/t and 1/(t+1)
  const double t = 0.3;
  const auto d = unit_torus(2, 4);
  const auto op = assemble_laplacian(build_degenerating_product_family({t, FamilyKind::kProductCollapse}, d, 1));
  const auto s = eigendecompose(op, 256, 1e-10);
  const double h = d.spacing(0);
  const double one = 0.25 * std::pow(2.0 * std::sin(kPi * h) / h, 2);
  CHECK(s.eigenvalues(1) == doctest::Approx(std::min(one / t, one / (t + 1.0))).epsilon(1e-10));
  CHECK(s.eigenvalues(255) == doctest::Approx(2.0 * 4.0 * 0.25 / (h * h) * (1.0 / t + 1.0 / (t + 1.0))).epsilon(1e-10));
}

TEST_CASE("heat kernel matches the lattice Fourier oracle") {
  const auto& s = flat16();
  const FlatDft dft{unit_torus(1, 16)};
  for (double t : {0.01, 0.1, 1.0}) {
    for (NodeId y : {0u, 5u, 100u, 137u}) {
      const auto h = heat_kernel_eval(s, 0, y, t);
      CHECK(h.value == doctest::Approx(dft.heat(0, y, t)).epsilon(1e-10));
      CHECK(h.tail_bound == 0.0);
    }
  }
}

TEST_CASE("heat kernel matches the matrix exponential") {
  const auto op = assemble_laplacian(build_family_member({0.1, FamilyKind::kPotentialPinch}, unit_torus(1, 12), 1));
  const auto s = eigendecompose(op, 144, 1e-11);
  const Eigen::MatrixXd e = expm_heat(op, 0.2);
  for (NodeId x : {0u, 7u, 77u})
    for (NodeId y : {0u, 30u, 143u})
      CHECK(heat_kernel_eval(s, x, y, 0.2).value == doctest::Approx(e(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))).epsilon(1e-9));
}

TEST_CASE("truncation control") {
  const auto op = flat_operator(1, 24);
  const auto s = eigendecompose(op, 20, 1e-10);
  const double tmin = minimum_valid_time(s, 0, 0);
  CHECK(tmin > 0.0);
  CHECK_NOTHROW((void)heat_kernel_eval(s, 0, 0, 1.2 * tmin));
  try {
    (void)heat_kernel_eval(s, 0, 0, 1e-4);
    FAIL("expected truncation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTruncation);
  }
  // the certified tail covers the true truncation error
  const FlatDft dft{unit_torus(1, 24)};
  const auto h = heat_kernel_eval(s, 0, 3, 0.3, 1.0);
  CHECK(std::abs(h.value - dft.heat(0, 3, 0.3)) <= h.tail_bound + 1e-12);
}

TEST_CASE("long time decay is exactly lambda_1") {
  const auto& s = flat16();
  CHECK(heat_decay_rate(s, 3, 1.0, 2.0) == doctest::Approx(s.eigenvalues(1)).epsilon(1e-3));
}

TEST_CASE("Green function: direct, spectral and Fourier oracle agree") {
  const auto op = flat_operator(1, 16);
  const auto& s = flat16();
  const FlatDft dft{unit_torus(1, 16)};
  const auto g = green_function_eval(op, 9);
  const auto gs = green_function_spectral(s, 9);
  CHECK((g.values - gs.values).cwiseAbs().maxCoeff() < 1e-9);
  for (NodeId y : {0u, 9u, 40u, 200u, 255u})
    CHECK(g.values(static_cast<Eigen::Index>(y)) == doctest::Approx(dft.green(9, y)).epsilon(1e-9));
  const auto r = green_equation_residual(op, g);
  CHECK(r.equation < 1e-10);
  CHECK(r.mean < 1e-12);
  // symmetry
  const auto g2 = green_function_eval(op, 40);
  CHECK(g.values(40) == doctest::Approx(g2.values(9)).epsilon(1e-10));
}

TEST_CASE("Green moments and representation") {
  const auto op = assemble_laplacian(build_family_member({0.1, FamilyKind::kPotentialPinch}, unit_torus(1, 16), 1));
  const auto g = green_function_eval(op, 5);
  const double c0 = g.lower_constant();
  CHECK(g.shifted(c0).minCoeff() >= 1.0 / op.volume - 1e-12);
  for (double beta : {0.25, 0.5, 0.75}) {
    const auto m = green_integral_moments(op, g, 1.0, beta, c0);
    CHECK(m.normalized_2 <= 1.0 + 1e-9);
    CHECK(m.normalized_1 > 0.0);
  }
  CHECK_THROWS_AS((void)green_integral_moments(op, g, 1.0, 0.0, c0), Error);

  FieldGen gen(5);
  std::vector<GreenFunction> greens = {g, green_function_eval(op, 100)};
  CHECK(green_representation_residual(op, greens, gen.noise(op.size())) < 1e-9);
  CHECK(green_representation_residual(op, greens, ScalarField::Constant(256, 2.0)) < 1e-12);
}

TEST_CASE("heat time derivative") {
  const auto& s = flat16();
  for (double t : {0.02, 0.1, 0.5}) {
    const auto h = heat_time_derivative_eval(s, 4, t);
    CHECK(h.l2_squared == doctest::Approx(h.l2_direct).epsilon(1e-9));
    CHECK(h.l2_squared <= h.reduced_diagonal / (t * t));
    CHECK(h.sup_norm > 0.0);
  }
}

TEST_CASE("spectral bound checks on the flat torus") {
  const auto& s = flat16();
  const auto growth = eigenvalue_growth_check(s, 1.0, 4.0 / 3.0, 100);
  CHECK(growth.fitted_constant > 0.0);
  const auto sup = eigenfunction_sup_check(s, 1.0, 1.0, 4.0 / 3.0);
  CHECK(std::isfinite(sup.fitted_constant));
  std::vector<double> tg = {0.05, 0.1, 0.5, 1.0};
  std::vector<NodeId> nodes = {0, 17, 200};
  const auto trace = heat_trace_bound_check(s, tg, 1.0, 1.0, 4.0 / 3.0, nodes);
  CHECK(trace.fitted_constant > 0.0);
  CHECK(std::isfinite(trace.fitted_constant));
  std::ostringstream out;
  write_spectrum_csv(s, out);
  CHECK(out.str().rfind("k,lambda,residual\n", 0) == 0);
}
