#include "kahlerlab/davies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kahlerlab/csv.hpp"
#include "kahlerlab/error.hpp"

namespace kahlerlab {

namespace {

void check_beta(double beta) {
  require(std::isfinite(beta) && beta > 0.0 && beta < 1.0, ErrorCode::kInvalidArgument,
          "beta must lie in (0, 1)");
}

void check_horizon(double horizon) {
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::kInvalidArgument,
          "horizon T must be positive");
}

double substitution_power(double beta) { return std::max(1.0 / beta, 1.0 / (1.0 - beta)); }

// Gauss-Kronrod 31 rule on one panel. The rule's error estimate is returned
// in reference-interval units, so it is rescaled to the panel here.
QuadratureResult gk_panel(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
  return {v, err * 0.5 * (b - a)};
}

// Global adaptive bisection: always split the panel with the largest error.
QuadratureResult gk(const std::function<double(double)>& f, double a, double b, double tol) {
  struct Panel {
    double a, b;
    QuadratureResult q;
    bool operator<(const Panel& o) const { return q.error < o.q.error; }
  };
  std::priority_queue<Panel> heap;
  heap.push({a, b, gk_panel(f, a, b)});
  double value = heap.top().q.value;
  double error = heap.top().q.error;
  constexpr int kMaxPanels = 4000;
  for (int panels = 1; error > tol && panels < kMaxPanels; ++panels) {
    const Panel p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) {
      heap.push(p);
      break;
    }
    const Panel l{p.a, m, gk_panel(f, p.a, m)};
    const Panel r{m, p.b, gk_panel(f, m, p.b)};
    value += l.q.value + r.q.value - p.q.value;
    error += l.q.error + r.q.error - p.q.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().q.value;
    error += heap.top().q.error;
    heap.pop();
  }
  return {value, error};
}

}  // namespace

double r_schedule(double t, double horizon, double beta) {
  check_horizon(horizon);
  check_beta(beta);
  require(std::isfinite(t) && t >= 0.0, ErrorCode::kInvalidDomain, "t must be >= 0");
  require(t < horizon, ErrorCode::kInvalidDomain,
          "t = " + format_number(t) + " is outside [0, T) with T = " + format_number(horizon));
  const double half = 0.5 * horizon;
  if (t < half) return (std::pow(2.0, beta) - 1.0) / std::pow(half, beta) * std::pow(t, beta) + 1.0;
  return std::pow(horizon / (horizon - t), beta);
}

double DaviesSchedule::operator()(double t) const { return r_schedule(t, horizon, beta); }

double DaviesSchedule::derivative(double t) const {
  (void)r_schedule(t, horizon, beta);
  const double half = 0.5 * horizon;
  if (t < half) {
    const double a = (std::pow(2.0, beta) - 1.0) / std::pow(half, beta);
    return t == 0.0 ? std::numeric_limits<double>::infinity() : a * beta * std::pow(t, beta - 1.0);
  }
  return beta * std::pow(horizon, beta) * std::pow(horizon - t, -beta - 1.0);
}

QuadratureResult integrate_endpoint_singular(const std::function<double(double)>& f, double a,
                                             double b, double k, double tol) {
  require(b > a, ErrorCode::kInvalidArgument, "empty integration interval");
  require(k >= 1.0 && tol > 0.0, ErrorCode::kInvalidArgument,
          "substitution power must be >= 1 and tolerance positive");
  const double m = 0.5 * (a + b);
  const double hl = m - a;
  const double hr = b - m;
  auto left = [&](double u) {
    const double d = hl * std::pow(u, k);
    if (d <= 0.0) return 0.0;
    return f(a + d) * hl * k * std::pow(u, k - 1.0);
  };
  auto right = [&](double v) {
    const double d = hr * std::pow(v, k);
    if (d <= 0.0) return 0.0;
    return f(b - d) * hr * k * std::pow(v, k - 1.0);
  };
  const QuadratureResult l = gk(left, 0.0, 1.0, tol / 2);
  const QuadratureResult r = gk(right, 0.0, 1.0, tol / 2);
  QuadratureResult out{l.value + r.value, l.error + r.error};
  if (!std::isfinite(out.value) || out.error > tol) {
    fail(ErrorCode::kQuadratureBudget, "quadrature error estimate " + format_number(out.error) +
                                           " exceeds tolerance " + format_number(tol));
  }
  return out;
}

// In s = t/T the schedule reads a s^beta + 1 on [0, 1/2) with
// a = 4^beta - 2^beta, and w^{-beta} with w = 1 - s on [1/2, 1).
DaviesConstants davies_integrals(double beta, double tol) {
  check_beta(beta);
  require(std::isfinite(tol) && tol > 0.0, ErrorCode::kInvalidArgument,
          "tolerance must be positive");
  const double a = std::pow(4.0, beta) - std::pow(2.0, beta);
  const double k = substitution_power(beta);
  const double part = tol / 2.0;

  auto a1 = [&](double s) {
    const double sb = std::pow(s, beta);
    const double den = a * sb + 1.0;
    return beta * a * std::pow(s, beta - 1.0) / (den * den) * std::log(beta / s);
  };
  auto a2 = [&](double w) {
    const double wb = std::pow(w, beta);
    return beta * std::pow(w, beta - 1.0) * std::log(beta / (w * (1.0 - wb)));
  };
  auto b1 = [&](double s) {
    const double x = a * std::pow(s, beta);
    return (x - 1.0) * (x - 1.0) / x;
  };
  auto b2 = [&](double w) {
    const double wb = std::pow(w, beta);
    return (1.0 - 2.0 * wb) * (1.0 - 2.0 * wb) / (wb * (1.0 - wb));
  };
  auto c1 = [&](double s) {
    const double x = a * std::pow(s, beta);
    return x / ((x + 1.0) * (x + 1.0));
  };
  auto c2 = [&](double w) {
    const double wb = std::pow(w, beta);
    return (1.0 - wb) * wb;
  };

  DaviesConstants out;
  out.beta = beta;
  const auto qa1 = integrate_endpoint_singular(a1, 0.0, 0.5, k, part);
  const auto qa2 = integrate_endpoint_singular(a2, 0.0, 0.5, k, part);
  const auto qb1 = integrate_endpoint_singular(b1, 0.0, 0.5, k, part);
  const auto qb2 = integrate_endpoint_singular(b2, 0.0, 0.5, k, part);
  const auto qc1 = integrate_endpoint_singular(c1, 0.0, 0.5, k, part);
  const auto qc2 = integrate_endpoint_singular(c2, 0.0, 0.5, k, part);
  out.a_beta = qa1.value + qa2.value;
  out.b_beta = qb1.value + qb2.value;
  out.c_beta = qc1.value + qc2.value;
  out.error_a = qa1.error + qa2.error;
  out.error_b = qb1.error + qb2.error;
  out.error_c = qc1.error + qc2.error;
  return out;
}

namespace {

// Integrates g(r, r - 1, r') over [0, T) branch by branch. The second branch
// is parameterized by w = T - t so that points near the blow-up are resolved;
// r - 1 is passed separately to avoid cancellation near t = 0.
QuadratureResult schedule_integral(double horizon, double beta, double tol,
                                   double (*g)(double r, double rm1, double dr)) {
  check_horizon(horizon);
  check_beta(beta);
  const double half = 0.5 * horizon;
  const double a = (std::pow(2.0, beta) - 1.0) / std::pow(half, beta);
  const double k = substitution_power(beta);
  auto first = [&](double t) {
    const double x = a * std::pow(t, beta);
    return g(x + 1.0, x, a * beta * std::pow(t, beta - 1.0));
  };
  auto second = [&](double w) {
    const double r = std::pow(horizon / w, beta);
    return g(r, r - 1.0, beta * r / w);
  };
  const QuadratureResult p = integrate_endpoint_singular(first, 0.0, half, k, tol / 2);
  const QuadratureResult q = integrate_endpoint_singular(second, 0.0, half, k, tol / 2);
  return {p.value + q.value, p.error + q.error};
}

}  // namespace

QuadratureResult schedule_unit_integral(double horizon, double beta, double tol) {
  return schedule_integral(horizon, beta, tol,
                           [](double r, double, double dr) { return dr / (r * r); });
}

QuadratureResult schedule_b_integral(double horizon, double beta, double tol) {
  return schedule_integral(horizon, beta, tol * horizon, [](double r, double rm1, double) {
    return (r - 2.0) * (r - 2.0) / rm1;
  });
}

QuadratureResult schedule_c_integral(double horizon, double beta, double tol) {
  return schedule_integral(horizon, beta, tol * horizon,
                           [](double r, double rm1, double) { return rm1 / (r * r); });
}

BoundReport gaussian_offdiag_check(const SpectralData& spec, double q, double intersection,
                                   double volume, double b_half, std::span<const ProbePair> probes,
                                   std::span<const double> t_grid, double noise_floor) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(b_half > 0.0, ErrorCode::kInvalidArgument, "B constant must be positive");
  const double e = q / (q - 1.0);
  const double rate = 4.0 + 2.0 * b_half;
  BoundReport r;
  r.check = "gaussian_offdiag";
  r.fitted_constant = -std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    require(t > 0.0, ErrorCode::kInvalidArgument, "t grid must be positive");
    for (const auto& p : probes) {
      const HeatKernelEval h = heat_kernel_eval(spec, p.x, p.y, t, 1e-6);
      const double hv = (h.value + h.tail_bound) * volume;
      if (hv < noise_floor) continue;
      const double scale = t <= intersection ? std::pow(t / intersection, e) : 1.0;
      const double lhs = hv * scale;
      const double rhs = std::exp(-p.distance * p.distance / (rate * t));
      const double c = lhs / rhs;
      ++r.samples;
      if (c > r.fitted_constant) {
        r.fitted_constant = c;
        r.lhs = lhs;
        r.rhs = rhs;
      }
    }
  }
  if (r.samples == 0) r.fitted_constant = 0.0;
  return r;
}

}  // namespace kahlerlab
