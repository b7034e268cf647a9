#include "doctest.h"
#include "support.hpp"

#include "kahlerlab/davies.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/spectral.hpp"

using namespace kltest;

TEST_CASE("schedule shape") {
  for (double beta : {0.25, 0.5, 0.75}) {
    const double big_t = 3.0;
    CHECK(r_schedule(0.0, big_t, beta) == 1.0);
    CHECK(r_schedule(0.5 * big_t, big_t, beta) == doctest::Approx(std::pow(2.0, beta)).epsilon(1e-15));
    const double left = DaviesSchedule{big_t, beta}(std::nextafter(0.5 * big_t, 0.0));
    CHECK(left == doctest::Approx(std::pow(2.0, beta)).epsilon(1e-12));
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double r = r_schedule(big_t * i / 1000.0, big_t, beta);
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(r_schedule(big_t * (1 - 1e-12), big_t, beta) > 100.0);
  }
  CHECK_THROWS_AS((void)r_schedule(1.0, 1.0, 0.5), Error);
}

TEST_CASE("quoted constants at beta = 1/2") {
  const auto d = davies_integrals(0.5);
  CHECK(d.a_beta == doctest::Approx(2.455).epsilon(0.01 / 2.455));
  CHECK(d.b_beta == doctest::Approx(2.008).epsilon(0.01 / 2.008));
  CHECK(d.c_beta == doctest::Approx(0.192).epsilon(0.005 / 0.192));
  // frozen from an independent high-precision evaluation
  CHECK(d.a_beta == doctest::Approx(2.4548101228).epsilon(1e-9));
  CHECK(d.b_beta == doctest::Approx(2.0081791044).epsilon(1e-9));
  CHECK(d.c_beta == doctest::Approx(0.1920647753).epsilon(1e-9));
  CHECK(d.error_a <= 1e-10);
  CHECK(d.error_b <= 1e-10);
  CHECK(d.error_c <= 1e-10);
}

TEST_CASE("schedule identities") {
  for (auto [big_t, beta] : {std::pair{1.0, 0.5}, std::pair{3.0, 0.25}, std::pair{10.0, 0.75}}) {
    CHECK(std::abs(schedule_unit_integral(big_t, beta).value - 1.0) < 1e-10);
    const auto d = davies_integrals(beta);
    CHECK(schedule_b_integral(big_t, beta).value == doctest::Approx(big_t * d.b_beta).epsilon(1e-6));
    CHECK(schedule_c_integral(big_t, beta).value == doctest::Approx(big_t * d.c_beta).epsilon(1e-6));
  }
}

TEST_CASE("beta continuity") {
  const auto a = davies_integrals(0.5);
  const auto b = davies_integrals(0.501);
  CHECK(std::abs(a.a_beta - b.a_beta) < 0.01);
  CHECK(std::abs(a.b_beta - b.b_beta) < 0.01);
  CHECK(std::abs(a.c_beta - b.c_beta) < 0.01);
}

TEST_CASE("endpoint singular quadrature") {
  // integral of s^{-1/2} (1-s)^{-1/2} on [0, 1] is pi
  const auto r = integrate_endpoint_singular([](double s) { return 1.0 / std::sqrt(s * (1.0 - s)); }, 0.0, 1.0, 2.0, 1e-12);
  CHECK(r.value == doctest::Approx(kPi).epsilon(1e-12));
  CHECK_THROWS_AS((void)integrate_endpoint_singular([](double s) { return 1.0 / s; }, 0.0, 1.0, 1.0, 1e-12), Error);
}

TEST_CASE("Gaussian off-diagonal check on the flat torus") {
  const auto op = flat_operator(1, 16);
  const auto s = eigendecompose(op, 256, 1e-10);
  const auto d = davies_integrals(0.5);
  std::vector<ProbePair> probes = {{0, 136, 2.0 * std::sqrt(0.5)}, {0, 8, 1.0}};
  std::vector<double> tg = {0.05, 0.1, 0.3, 1.0, 2.0};
  const auto r = gaussian_offdiag_check(s, 4.0 / 3.0, 1.0, 1.0, d.b_beta, probes, tg);
  CHECK(std::isfinite(r.fitted_constant));
  CHECK(r.fitted_constant > 0.0);
  CHECK(r.samples > 0);

  // x = y reduces to the diagonal value
  std::vector<ProbePair> diag = {{3, 3, 0.0}};
  std::vector<double> t1 = {0.5};
  const auto rd = gaussian_offdiag_check(s, 4.0 / 3.0, 1.0, 1.0, d.b_beta, diag, t1);
  const double h = heat_kernel_eval(s, 3, 3, 0.5).value;
  CHECK(rd.fitted_constant == doctest::Approx(h * std::pow(0.5, 4.0)).epsilon(1e-12));
}
