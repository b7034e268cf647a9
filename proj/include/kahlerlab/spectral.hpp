#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kahlerlab/operator.hpp"
#include "kahlerlab/report.hpp"

namespace kahlerlab {

// First K eigenpairs of -L with eigenfunctions orthonormal in L^2(mu).
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenfunctions;  // N x K, column k is phi_k
  Eigen::VectorXd residuals;       // ||L phi_k + lambda_k phi_k||_mu
  ScalarField mass;
  ScalarField remainder;  // 1/mu_x - sum_k phi_k(x)^2 >= 0, the untruncated mass
  double volume = 0.0;

  [[nodiscard]] int count() const noexcept { return static_cast<int>(eigenvalues.size()); }
  [[nodiscard]] std::size_t node_count() const noexcept {
    return static_cast<std::size_t>(mass.size());
  }
  [[nodiscard]] bool complete() const noexcept {
    return static_cast<std::size_t>(count()) == node_count();
  }
};

struct EigenOptions {
  int max_dense = 4096;      // dense path up to this many nodes
  bool force_iterative = false;
  int max_iterations = 500;
  std::uint64_t seed = 0x5eed;
};

// tol bounds the relative residual ||L phi + lambda phi||_mu / max(1, lambda).
[[nodiscard]] SpectralData eigendecompose(const SparseOperator& op, int k, double tol,
                                          const EigenOptions& options = {});

struct HeatKernelEval {
  double t = 0.0;
  double value = 0.0;      // truncated spectral sum
  double tail_bound = 0.0; // certified bound on the omitted modes
  double deviation = 0.0;  // value - 1/V
};

// Fails with a truncation error when tail_bound > tol * max(|H|, 1/V), naming
// the smallest admissible t.
[[nodiscard]] HeatKernelEval heat_kernel_eval(const SpectralData& spec, NodeId x, NodeId y,
                                              double t, double tol = 1e-8);

// H(x, ., t) as a field.
[[nodiscard]] ScalarField heat_kernel_row(const SpectralData& spec, NodeId x, double t);

// Smallest t for which the truncation tail at (x, y) is within tol.
[[nodiscard]] double minimum_valid_time(const SpectralData& spec, NodeId x, NodeId y,
                                        double tol = 1e-8);

// sup over t and x of (H(x,x,t) - 1/V) V (t/I)^{q/(q-1)}.
[[nodiscard]] BoundReport heat_trace_bound_check(const SpectralData& spec,
                                                 std::span<const double> t_grid,
                                                 double intersection, double volume, double q,
                                                 std::span<const NodeId> nodes);

// Exponential decay rate of |H(x,x,t) - 1/V| between t1 and t2.
[[nodiscard]] double heat_decay_rate(const SpectralData& spec, NodeId x, double t1, double t2);

struct GreenFunction {
  NodeId source = 0;
  ScalarField values;  // zero mean in L^2(mu)
  double volume = 0.0;

  [[nodiscard]] double min_value() const { return values.minCoeff(); }
  // C0 = max(0, -V min G)
  [[nodiscard]] double lower_constant() const;
  // G + (C0 + 1)/V, >= 1/V
  [[nodiscard]] ScalarField shifted(double c0) const;
};

// Factorizes the grounded stiffness matrix once for repeated direct solves.
class GreenSolver {
 public:
  explicit GreenSolver(const SparseOperator& op);
  ~GreenSolver();
  GreenSolver(GreenSolver&&) noexcept;
  GreenSolver& operator=(GreenSolver&&) noexcept;

  [[nodiscard]] GreenFunction solve(NodeId source) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

[[nodiscard]] GreenFunction green_function_eval(const SparseOperator& op, NodeId source);

// Spectral sum over k >= 1; requires a complete spectrum.
[[nodiscard]] GreenFunction green_function_spectral(const SpectralData& spec, NodeId source);

// max |L G - (1/V - e_x/mu_x)| and |<G, 1>_mu|
struct GreenResidual {
  double equation = 0.0;
  double mean = 0.0;
};
[[nodiscard]] GreenResidual green_equation_residual(const SparseOperator& op,
                                                    const GreenFunction& g);

struct GreenMoments {
  double moment_1 = 0.0;  // integral of Gs^{1+eps}
  double moment_2 = 0.0;  // integral of |grad Gs|^2 / Gs^{1+beta}
  double min_value = 0.0; // min G
  double normalized_1 = 0.0;  // V^eps moment_1
  double normalized_2 = 0.0;  // beta V^{-beta} moment_2, <= 1
};

// Gs = G + (c0 + 1)/V. The gradient moment uses the edge form with the
// generalized mean of s^{-1-beta} along each edge, so the bound V^beta/beta
// holds exactly in the discrete pairing.
[[nodiscard]] GreenMoments green_integral_moments(const SparseOperator& op, const GreenFunction& g,
                                                  double eps, double beta, double c0);

// max over sources of |u(x) - mean(u) - <grad G(x,.), grad u>|
[[nodiscard]] double green_representation_residual(const SparseOperator& op,
                                                   std::span<const GreenFunction> greens,
                                                   const ScalarField& u);

struct HeatDerivativeEval {
  double l2_squared = 0.0;   // integral of Hdot(x, y, t)^2 dmu(y), Parseval form
  double l2_direct = 0.0;    // same integral summed on the grid
  double sup_norm = 0.0;     // sup_y |Hdot(x, y, t)|
  double reduced_diagonal = 0.0;  // H(x, x, t) - 1/V
};

[[nodiscard]] HeatDerivativeEval heat_time_derivative_eval(const SpectralData& spec, NodeId x,
                                                           double t);

// min over 1 <= k < K of lambda_k I / k^{(q-1)/q}; floor check.
[[nodiscard]] BoundReport eigenvalue_growth_check(const SpectralData& spec, double intersection,
                                                  double q, int max_index = -1);

// max over k >= 1 of max|phi_k|^2 V (I lambda_k)^{-q/(q-1)}.
[[nodiscard]] BoundReport eigenfunction_sup_check(const SpectralData& spec, double intersection,
                                                  double volume, double q);

void write_spectrum_csv(const SpectralData& spec, std::ostream& out);

}  // namespace kahlerlab
