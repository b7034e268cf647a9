#include "kahlerlab/moser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseCholesky>

#include "kahlerlab/csv.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/functionals.hpp"

namespace kahlerlab {

namespace {

void check_radii(const SubdomainProblem& p) {
  require(std::isfinite(p.r) && std::isfinite(p.R) && p.r > 0.0 && p.r < p.R,
          ErrorCode::kInvalidArgument, "invalid radii: need 0 < r < R");
}

void check_sizes(const SparseOperator& op, const SubdomainProblem& p) {
  require(p.u.size() == op.mass.size() && p.f.size() == op.mass.size(),
          ErrorCode::kInvalidArgument, "u and f must be sampled on the operator's grid");
}

}  // namespace

std::vector<char> ball_interior(const SparseOperator& op, const std::vector<double>& distances,
                                double radius) {
  std::vector<char> in(op.size(), 0);
  for (NodeId x = 0; x < op.size(); ++x) {
    if (distances[x] > radius) continue;
    const auto nb = stencil_neighbors(op, x);
    in[x] = std::all_of(nb.begin(), nb.end(), [&](NodeId y) { return distances[y] <= radius; });
  }
  return in;
}

double verify_subsolution(const SparseOperator& op, const SubdomainProblem& prob) {
  check_radii(prob);
  check_sizes(op, prob);
  const auto dist = geodesic_distances(op, prob.center);
  const auto interior = ball_interior(op, dist, prob.R);
  const ScalarField lu = op.apply(prob.u);
  const double scale = std::max(1.0, prob.f.cwiseAbs().maxCoeff());
  double worst = std::numeric_limits<double>::infinity();
  NodeId worst_node = 0;
  bool any = false;
  for (NodeId x = 0; x < op.size(); ++x) {
    if (!interior[x]) continue;
    any = true;
    const auto i = static_cast<Eigen::Index>(x);
    const double m = lu(i) - prob.f(i);
    if (m < worst) {
      worst = m;
      worst_node = x;
    }
  }
  require(any, ErrorCode::kPrecondition, "ball B_R has no interior nodes");
  if (worst < -1e-12 * scale) {
    const auto c = op.domain.coords(worst_node);
    std::string where;
    for (std::size_t a = 0; a < c.size(); ++a) where += (a ? "," : "") + std::to_string(c[a]);
    fail(ErrorCode::kPrecondition, "differential inequality L u >= f violated at node " +
                                       std::to_string(worst_node) + " (" + where +
                                       "): L u - f = " + format_number(worst));
  }
  return worst;
}

MoserTerms moser_terms(const SparseOperator& op, const SubdomainProblem& prob, double volume,
                       double q) {
  check_radii(prob);
  check_sizes(op, prob);
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(prob.s > 0.0, ErrorCode::kInvalidArgument, "s must be positive");
  require(prob.N > q / (q - 1.0), ErrorCode::kInvalidArgument, "N must exceed q/(q-1)");
  const auto dist = geodesic_distances(op, prob.center);
  MoserTerms t;
  double fn = 0.0, un = 0.0;
  for (NodeId x = 0; x < op.size(); ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    const double up = std::max(0.0, prob.u(i));
    if (dist[x] <= prob.r) t.sup = std::max(t.sup, up);
    if (dist[x] <= prob.R) {
      fn += std::pow(std::abs(prob.f(i)), prob.N) * op.mass(i);
      un += std::pow(up, prob.s) * op.mass(i);
    }
  }
  t.f_norm = std::pow(fn / volume, 1.0 / prob.N);
  t.u_norm = std::pow(un / volume, 1.0 / prob.s);
  const double gap = prob.R - prob.r;
  t.f_term = std::pow(gap, -1.0 / (q - 1.0)) * t.f_norm;
  t.u_term = std::pow(gap, -2.0 / (prob.s * (q - 1.0))) * t.u_norm;
  return t;
}

BoundReport moser_sup_bound_check(const SubdomainProblem& prob, const SparseOperator& op,
                                  double volume, double q) {
  (void)verify_subsolution(op, prob);
  const MoserTerms t = moser_terms(op, prob, volume, q);
  BoundReport r;
  r.check = "moser";
  r.lhs = t.sup;
  r.rhs = t.f_term + t.u_term;
  r.samples = 1;
  r.fitted_constant = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return r;
}

MoserInstance generate_subharmonic_instance(const SparseOperator& op, NodeId center, double r,
                                            double R, double q, std::uint64_t seed,
                                            bool dense_oracle) {
  const auto n = static_cast<Eigen::Index>(op.size());
  const auto dist = geodesic_distances(op, center);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ScalarField g = ScalarField::Zero(n);
  double inside = 0.0, outside = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dist[static_cast<std::size_t>(i)] <= R) {
      g(i) = 0.5 + unit(rng);
      inside += g(i) * op.mass(i);
    } else {
      outside += op.mass(i);
    }
  }
  require(outside > 0.0, ErrorCode::kInvalidArgument, "ball B_R covers the whole torus");
  const double c = inside / outside;
  ScalarField rhs(n);
  for (Eigen::Index i = 0; i < n; ++i)
    rhs(i) = dist[static_cast<std::size_t>(i)] <= R ? g(i) : -c;

  // L u = rhs  <=>  S u = -M rhs, grounded at the last node.
  const ScalarField b = -op.mass.cwiseProduct(rhs);
  SparseMatrix reduced = op.stiffness.topLeftCorner(n - 1, n - 1);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(reduced);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::kSingular, "grounded solve failed");
  ScalarField u(n);
  u.head(n - 1) = ldlt.solve(b.head(n - 1));
  u(n - 1) = 0.0;

  MoserInstance inst;
  if (dense_oracle) {
    const Eigen::MatrixXd l = dense_laplacian(op);
    Eigen::MatrixXd aug = l;
    aug.row(n - 1).setZero();
    aug(n - 1, n - 1) = 1.0;
    ScalarField rhs2 = rhs;
    rhs2(n - 1) = 0.0;
    const ScalarField ud = aug.partialPivLu().solve(rhs2);
    inst.oracle_deviation = (ud - u).cwiseAbs().maxCoeff();
    const ScalarField lu = l * ud;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dist[static_cast<std::size_t>(i)] <= R)
        require(lu(i) - (1.0 - 1e-6) * g(i) >= -1e-10, ErrorCode::kSolver,
                "dense oracle contradicts the subsolution property");
    }
  }

  double top = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity(),
         hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = dist[static_cast<std::size_t>(i)];
    if (d <= r) top = std::max(top, u(i));
    if (d <= R) lo = std::min(lo, u(i)), hi = std::max(hi, u(i));
  }
  require(std::isfinite(top), ErrorCode::kInvalidArgument, "ball B_r contains no node");
  // sup over B_r lands in (0.25, 1.25) times the oscillation over B_R
  const double osc = std::max(hi - lo, 1e-300);
  u.array() += (0.25 + unit(rng)) * osc - top;
  inst.problem.center = center;
  inst.problem.r = r;
  inst.problem.R = R;
  inst.problem.u = u;
  inst.problem.f = (1.0 - 1e-6) * g;
  inst.problem.s = 2.0;
  inst.problem.N = 2.0 * q / (q - 1.0);
  return inst;
}

ScalarField radial_cutoff(const std::vector<double>& distances, double r_inner, double r_outer) {
  require(r_outer > r_inner && r_inner >= 0.0, ErrorCode::kInvalidArgument,
          "cutoff radii must satisfy 0 <= r_inner < r_outer");
  ScalarField eta(static_cast<Eigen::Index>(distances.size()));
  for (std::size_t x = 0; x < distances.size(); ++x) {
    const double s = std::clamp((r_outer - distances[x]) / (r_outer - r_inner), 0.0, 1.0);
    eta(static_cast<Eigen::Index>(x)) = s * s * (3.0 - 2.0 * s);
  }
  return eta;
}

std::vector<BoundReport> local_inequality_check(const SparseOperator& op, const LocalDomain& dom,
                                                const ScalarField& u, LocalMode mode, double q) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  const auto n = static_cast<Eigen::Index>(op.size());
  require(u.size() == n && dom.omega.size() == op.size(), ErrorCode::kInvalidArgument,
          "u and Omega must live on the operator's grid");
  const double v = op.volume;
  double vol_omega = 0.0, mean_num = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!dom.omega[static_cast<std::size_t>(i)]) continue;
    vol_omega += op.mass(i);
    mean_num += u(i) * op.mass(i);
  }
  require(vol_omega > 0.0, ErrorCode::kPrecondition, "Omega is empty");

  BoundReport sob, poi;
  sob.samples = poi.samples = 1;
  if (mode == LocalMode::kInterior) {
    require(dom.omega_prime.size() == op.size() && dom.eta.size() == n,
            ErrorCode::kInvalidArgument, "interior mode needs Omega' and a cutoff");
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (dom.omega[k] && !dom.omega_prime[k])
        fail(ErrorCode::kPrecondition, "Omega is not contained in Omega' at node " + std::to_string(i));
      if (dom.omega[k] && std::abs(dom.eta(i) - 1.0) > 1e-12)
        fail(ErrorCode::kPrecondition, "cutoff is not 1 on Omega at node " + std::to_string(i));
      if (!dom.omega_prime[k] && dom.eta(i) != 0.0)
        fail(ErrorCode::kPrecondition, "cutoff is not supported in Omega' at node " + std::to_string(i));
    }
    const double ubar = mean_num / vol_omega;
    double s2q = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!dom.omega[static_cast<std::size_t>(i)]) continue;
      const double d = std::abs(u(i) - ubar);
      s2q += std::pow(d, 2.0 * q) * op.mass(i);
      s2 += d * d * op.mass(i);
    }
    const double energy = dirichlet_energy(op, dom.eta.cwiseProduct(u));
    sob.check = "local_sobolev";
    sob.lhs = std::pow(s2q / v, 1.0 / q);
    sob.rhs = energy / v;
    poi.check = "local_poincare";
    poi.lhs = s2;
    poi.rhs = energy;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!dom.omega[static_cast<std::size_t>(i)] && u(i) != 0.0)
        fail(ErrorCode::kPrecondition, "u is not supported in Omega: u = " + format_number(u(i)) +
                                           " at node " + std::to_string(i));
    }
    const double vol_c = v - vol_omega;
    require(vol_c > 0.0, ErrorCode::kPrecondition, "Omega has empty complement");
    const double factor = 1.0 + vol_omega / vol_c;
    double s2q = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(u(i));
      s2q += std::pow(a, 2.0 * q) * op.mass(i);
      s2 += a * a * op.mass(i);
    }
    const double energy = dirichlet_energy(op, u);
    sob.check = "local_sobolev0";
    sob.lhs = std::pow(s2q / v, 1.0 / q);
    sob.rhs = factor * energy / v;
    poi.check = "local_poincare0";
    poi.lhs = s2;
    poi.rhs = factor * energy;
  }
  for (BoundReport* r : {&sob, &poi}) {
    if (r->rhs > 0.0) {
      r->fitted_constant = r->lhs / r->rhs;
    } else {
      r->fitted_constant = r->lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      r->samples = 0;
    }
  }
  return {sob, poi};
}

BoundReport green_pointwise_bound_check(const SparseOperator& op,
                                        std::span<const GreenFunction> greens,
                                        std::span<const std::vector<double>> distances, double q,
                                        double volume) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(greens.size() == distances.size(), ErrorCode::kInvalidArgument,
          "one distance field per Green function expected");
  const double e = 2.0 / (q - 1.0);
  BoundReport r;
  r.check = "green_pointwise";
  r.fitted_constant = 0.0;
  for (std::size_t k = 0; k < greens.size(); ++k) {
    const auto& g = greens[k];
    const auto& d = distances[k];
    for (NodeId y = 0; y < op.size(); ++y) {
      if (y == g.source) continue;
      const double val = g.values(static_cast<Eigen::Index>(y));
      if (!(val > 0.0) || !(d[y] > 0.0)) continue;
      const double lhs = val * volume;
      const double rhs = std::pow(d[y], -e);
      ++r.samples;
      if (lhs / rhs > r.fitted_constant) {
        r.fitted_constant = lhs / rhs;
        r.lhs = lhs;
        r.rhs = rhs;
      }
    }
  }
  return r;
}

}  // namespace kahlerlab
