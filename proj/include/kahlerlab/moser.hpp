#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kahlerlab/operator.hpp"
#include "kahlerlab/report.hpp"
#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

// Data of the mean value inequality: L u >= f on the geodesic ball B_R.
struct SubdomainProblem {
  NodeId center = 0;
  double r = 0.0;
  double R = 0.0;
  ScalarField u;
  ScalarField f;
  double s = 2.0;  // low exponent
  double N = 8.0;  // integrability exponent of f, > q/(q-1)
};

// Nodes of B_R whose whole stencil lies in B_R.
[[nodiscard]] std::vector<char> ball_interior(const SparseOperator& op,
                                              const std::vector<double>& distances, double radius);

// min over interior nodes of (L u - f); throws a precondition error naming
// the worst node when it drops below -1e-12 (relative to max(1, |f|_inf)).
[[nodiscard]] double verify_subsolution(const SparseOperator& op, const SubdomainProblem& prob);

struct MoserTerms {
  double sup = 0.0;        // sup over B_r of u^+
  double f_norm = 0.0;     // (V^{-1} int_{B_R} |f|^N)^{1/N}
  double u_norm = 0.0;     // (V^{-1} int_{B_R} (u^+)^s)^{1/s}
  double f_term = 0.0;     // (R - r)^{-1/(q-1)} f_norm
  double u_term = 0.0;     // (R - r)^{-2/(s(q-1))} u_norm
};

[[nodiscard]] MoserTerms moser_terms(const SparseOperator& op, const SubdomainProblem& prob,
                                     double volume, double q);

// fitted C = sup / (f_term + u_term) after the subsolution precondition.
[[nodiscard]] BoundReport moser_sup_bound_check(const SubdomainProblem& prob,
                                                const SparseOperator& op, double volume,
                                                double q);

// Instance generator: solves L u = g chi_B - c chi_{B^c} with a seeded
// positive g on B_R and c fixing the mean, sets f = (1 - 1e-6) g and adds a
// random constant. When dense_oracle is set the solve is repeated with a
// dense factorization of L and compared.
struct MoserInstance {
  SubdomainProblem problem;
  double oracle_deviation = 0.0;  // max |u_sparse - u_dense|; 0 when unchecked
};

[[nodiscard]] MoserInstance generate_subharmonic_instance(const SparseOperator& op, NodeId center,
                                                          double r, double R, double q,
                                                          std::uint64_t seed, bool dense_oracle);

enum class LocalMode { kInterior, kZeroBoundary };

struct LocalDomain {
  std::vector<char> omega;        // Omega
  std::vector<char> omega_prime;  // Omega', interior mode only
  ScalarField eta;                // cutoff, interior mode only
};

// Radial cutoff 1 on d <= r_inner, 0 on d >= r_outer, smoothstep between;
// Lipschitz constant 1.5/(r_outer - r_inner) <= 4/(r_outer - r_inner).
[[nodiscard]] ScalarField radial_cutoff(const std::vector<double>& distances, double r_inner,
                                        double r_outer);

// Two reports, Sobolev then Poincare, named local_sobolev/local_poincare or
// local_sobolev0/local_poincare0 by mode.
[[nodiscard]] std::vector<BoundReport> local_inequality_check(const SparseOperator& op,
                                                              const LocalDomain& dom,
                                                              const ScalarField& u, LocalMode mode,
                                                              double q);

// sup over sources x and nodes y != x with G > 0 of G(x,y) V d(x,y)^{2/(q-1)}.
[[nodiscard]] BoundReport green_pointwise_bound_check(const SparseOperator& op,
                                                      std::span<const GreenFunction> greens,
                                                      std::span<const std::vector<double>> distances,
                                                      double q, double volume);

}  // namespace kahlerlab
