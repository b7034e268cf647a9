#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kahlerlab/grid.hpp"

namespace kahlerlab {

using ScalarField = Eigen::VectorXd;

enum class FamilyKind { kProductCollapse, kPotentialPinch, kScaling };

[[nodiscard]] const char* family_kind_name(FamilyKind kind) noexcept;
[[nodiscard]] FamilyKind parse_family_kind(const std::string& name);

struct FamilyParameter {
  double t = 1.0;
  FamilyKind kind = FamilyKind::kProductCollapse;
};

// Scalar Kähler potential sampled on the grid nodes.
struct KahlerPotential {
  ScalarField values;
};

// Kähler metric sampled at the nodes of a periodic grid.
//
// The metric g_{j kbar} is stored as an n x n Hermitian matrix per node. The
// volume density is det(g) against the real coordinate measure, so that
// V = integral of omega^n carries no 1/n! factor and the normalized flat
// reference has V = 1.
struct MetricField {
  GridDomain domain;
  std::vector<std::complex<double>> metric;          // n*n per node, row major
  std::vector<std::complex<double>> inverse_metric;  // g^{j kbar}, n*n per node
  ScalarField volume_density;
  ScalarField reference_density;
  ScalarField relative_density;  // e^F = (1/V) omega^n / omega_X^n
  ScalarField gamma_floor;
  double volume = 0.0;
  std::string vanishing_set = "empty";  // analytic zero set of gamma_floor

  [[nodiscard]] std::size_t node_count() const noexcept { return domain.node_count(); }
  [[nodiscard]] Eigen::MatrixXcd metric_at(NodeId node) const;
  [[nodiscard]] Eigen::MatrixXcd inverse_at(NodeId node) const;

  // Real 2n x 2n coefficient matrix A with Delta u = A^{ab} d_a d_b u and
  // |grad u|^2 = A^{ab} d_a u d_b u (complex convention: A = I/4 when g = I).
  [[nodiscard]] Eigen::MatrixXd real_coefficients(NodeId node) const;

  [[nodiscard]] double min_metric_eigenvalue() const;
};

// Flat metric on the torus. With normalize_volume the metric is rescaled by a
// constant so that V = 1; otherwise g is the identity in the grid coordinates.
[[nodiscard]] MetricField build_flat_torus(const GridDomain& domain, bool normalize_volume);

// g = g_base + i ddbar(phi) with centered second differences.
[[nodiscard]] MetricField perturb_with_potential(const MetricField& base,
                                                 const KahlerPotential& phi,
                                                 double positivity_margin);

// omega_t = t omega_X + pi^* omega_Y on (fiber x base) where the first
// fiber_dims complex coordinates form the fiber.
[[nodiscard]] MetricField build_degenerating_product_family(const FamilyParameter& t,
                                                            const GridDomain& domain,
                                                            int fiber_dims);

// Potential family interpolating from the flat reference (t = 1) towards a
// metric whose volume density nearly vanishes on a lattice of points (t -> 0).
[[nodiscard]] KahlerPotential pinch_potential(const GridDomain& domain, double t,
                                              double amplitude);

// Dispatches on the family kind: product collapse, potential pinch or scaling.
[[nodiscard]] MetricField build_family_member(const FamilyParameter& parameter,
                                              const GridDomain& domain, int fiber_dims);

[[nodiscard]] MetricField scale_metric(const MetricField& omega, double c);

[[nodiscard]] ScalarField relative_volume_density(const MetricField& omega,
                                                  const MetricField& reference);

// I = integral of omega wedge omega_X^{n-1} (equals V when n = 1).
[[nodiscard]] double intersection_number(const MetricField& omega, const MetricField& reference);

// Integral of e^F against omega_X^n; equals 1 for any metric.
[[nodiscard]] double relative_density_mass(const MetricField& omega);

// Debug dump: node, coordinates, Re/Im of g^{j kbar}, density, e^F, gamma.
void write_metric_csv(const MetricField& omega, std::ostream& out);

}  // namespace kahlerlab
