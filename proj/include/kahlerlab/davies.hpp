#pragma once

#include <functional>
#include <span>

#include "kahlerlab/report.hpp"
#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

// Index schedule r(t) on [0, T): power growth from 1 to 2^beta on the first
// half, then T^beta / (T - t)^beta blowing up at T.
struct DaviesSchedule {
  double horizon = 1.0;
  double beta = 0.5;

  [[nodiscard]] double operator()(double t) const;
  [[nodiscard]] double derivative(double t) const;
};

[[nodiscard]] double r_schedule(double t, double horizon, double beta);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod on [a, b] after the substitutions s = a + (m - a) u^k
// on the left half and s = b - (b - m) v^k on the right half, which removes
// algebraic endpoint singularities of order > -1 + 1/k. Fails with a
// quadrature-budget error when the estimate exceeds tol (absolute).
[[nodiscard]] QuadratureResult integrate_endpoint_singular(const std::function<double(double)>& f,
                                                           double a, double b, double k,
                                                           double tol);

struct DaviesConstants {
  double beta = 0.5;
  double a_beta = 0.0;
  double b_beta = 0.0;
  double c_beta = 0.0;
  double error_a = 0.0;
  double error_b = 0.0;
  double error_c = 0.0;
};

[[nodiscard]] DaviesConstants davies_integrals(double beta, double tol = 1e-10);

// Direct quadratures in t of the schedule identities.
[[nodiscard]] QuadratureResult schedule_unit_integral(double horizon, double beta,
                                                      double tol = 1e-12);  // r'/r^2
[[nodiscard]] QuadratureResult schedule_b_integral(double horizon, double beta,
                                                   double tol = 1e-10);  // (r-2)^2/(r-1)
[[nodiscard]] QuadratureResult schedule_c_integral(double horizon, double beta,
                                                   double tol = 1e-12);  // (r-1)/r^2

struct ProbePair {
  NodeId x = 0;
  NodeId y = 0;
  double distance = 0.0;
};

// sup of H(x,y,t) V (t/I)^{q/(q-1)} exp(d^2 / ((4 + 2 B) t)) over probes and
// times, dropping the (t/I) factor for t > I. Samples with H V below
// noise_floor are skipped.
[[nodiscard]] BoundReport gaussian_offdiag_check(const SpectralData& spec, double q,
                                                 double intersection, double volume,
                                                 double b_half, std::span<const ProbePair> probes,
                                                 std::span<const double> t_grid,
                                                 double noise_floor = 1e-8);

}  // namespace kahlerlab
