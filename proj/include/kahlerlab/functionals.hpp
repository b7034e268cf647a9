#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kahlerlab/geometry.hpp"
#include "kahlerlab/operator.hpp"
#include "kahlerlab/report.hpp"
#include "kahlerlab/spectral.hpp"

namespace kahlerlab {

// Parameters of the admissible set a metric was measured against.
struct AdmissibilityRecord {
  int n = 1;
  double p = 2.0;                 // entropy exponent, > n
  double class_cap = 0.0;         // A: cap on the intersection number
  double entropy = 0.0;           // K: measured Nash-Yau entropy
  bool gamma_min_positive = true;
  double gamma_min = 0.0;
  double volume = 0.0;
  double intersection = 0.0;
  double lambda1_i = 0.0;         // scale-invariant spectral gap

  [[nodiscard]] bool within_cap() const { return intersection <= class_cap; }
};

// N_p = integral of |F|^p e^F against the reference volume form.
[[nodiscard]] double nash_yau_entropy(const MetricField& omega, const MetricField& reference,
                                      double p);

[[nodiscard]] AdmissibilityRecord admissibility_record(const MetricField& omega,
                                                       const MetricField& reference, double p,
                                                       double class_cap, double lambda1);

struct QuotientValue {
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] double ratio() const { return lhs / rhs; }
};

// (V^{-1} int |u - ubar|^{2q})^{1/q} against (I/V) int |grad u|^2.
// Empty when u is constant (both sides vanish).
[[nodiscard]] std::optional<QuotientValue> sobolev_quotient(const SparseOperator& op,
                                                            const ScalarField& u, double q,
                                                            double intersection, double volume);

// (V^{-1} int |u|^{2q})^{1/q} against V^{-1} int (u^2 + |grad u|^2).
[[nodiscard]] std::optional<QuotientValue> sobolev_moser_quotient(const SparseOperator& op,
                                                                  const ScalarField& u, double q,
                                                                  double volume);

// (V^{-1} int |u - ubar|^{2q'})^{1/q'} against (V^{-1} int |grad u|^{2p'})^{1/p'}.
// Requires n >= 2, 1 <= p' < n and p' <= q' < n p'/(n - p').
[[nodiscard]] std::optional<QuotientValue> improved_sobolev_quotient(const SparseOperator& op,
                                                                     const ScalarField& u,
                                                                     double p_prime,
                                                                     double q_prime,
                                                                     double volume);

// Deterministic test-function family: band-limited random Fourier sums,
// periodic Gaussian bumps at several scales and coordinate-distance cutoffs.
[[nodiscard]] std::vector<ScalarField> sobolev_battery(const GridDomain& domain, int count,
                                                       std::uint64_t seed);

enum class SobolevForm { kStandard, kMoser, kImproved };

// sup of the quotient over the battery; constants are skipped.
[[nodiscard]] BoundReport sobolev_battery_check(const SparseOperator& op,
                                                std::span<const ScalarField> battery,
                                                SobolevForm form, double q, double intersection,
                                                double volume, double p_prime = 1.0);

struct BallGeometry {
  NodeId center = 0;
  std::vector<double> radii;
  std::vector<double> distances;     // d(center, x) for every node
  std::vector<double> ball_volumes;  // Vol(B(center, r)) per radius

  [[nodiscard]] double ball_volume(double r) const;
  [[nodiscard]] double eccentricity() const;
};

// Riemannian length of the lattice step delta at a node, in the metric
// A^{-1} dual to the Laplacian's coefficients.
[[nodiscard]] double step_length(const SparseOperator& op, NodeId node, std::span<const int> delta);

// Single-source shortest paths over all 3^d - 1 neighbor steps; each edge is
// weighted by the mean of the step lengths at its endpoints.
[[nodiscard]] std::vector<double> geodesic_distances(const SparseOperator& op, NodeId center);

[[nodiscard]] BallGeometry geodesic_geometry(const SparseOperator& op, NodeId center,
                                             std::span<const double> radii);

[[nodiscard]] double geodesic_diameter(const SparseOperator& op, std::span<const NodeId> sources);

// min over balls with Vol/V <= 1/2 of Vol(B(p,r)) / (V r^{2q/(q-1)}); floor check.
[[nodiscard]] BoundReport noncollapsing_check(std::span<const BallGeometry> balls, double q,
                                              double volume);

// lambda_1 I
[[nodiscard]] double poincare_gap(const SpectralData& spec, double intersection);

// Evenly spread deterministic sample of node ids.
[[nodiscard]] std::vector<NodeId> spread_nodes(const GridDomain& domain, int count,
                                               std::uint64_t seed);

}  // namespace kahlerlab
