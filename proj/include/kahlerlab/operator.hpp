#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kahlerlab/geometry.hpp"

namespace kahlerlab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Discrete Laplacian L = -M^{-1} S where S is the symmetric positive
// semidefinite stiffness matrix of the Dirichlet form and M = diag(mass).
struct SparseOperator {
  GridDomain domain;
  SparseMatrix stiffness;
  ScalarField mass;            // mu_x = volume density * cell volume
  std::vector<double> coeffs;  // per-node real coefficient matrix A, (2n)^2 each
  double volume = 0.0;
  std::size_t negative_conductances = 0;

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(mass.size());
  }
  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> coefficient(NodeId node) const;

  // L u
  [[nodiscard]] ScalarField apply(const ScalarField& u) const;
};

struct GradientEdge {
  NodeId from = 0;
  NodeId to = 0;
  double conductance = 0.0;  // -S(from, to)
  double difference = 0.0;   // u(to) - u(from)
};

// Edge differences of u; sum of conductance * difference^2 is the energy.
struct GradientField {
  std::vector<GradientEdge> edges;

  [[nodiscard]] double energy() const;
};

[[nodiscard]] SparseOperator assemble_laplacian(const MetricField& metric);

[[nodiscard]] double dirichlet_energy(const SparseOperator& op, const ScalarField& u);
[[nodiscard]] double weighted_inner_product(const SparseOperator& op, const ScalarField& u,
                                            const ScalarField& v);
[[nodiscard]] GradientField gradient_field(const SparseOperator& op, const ScalarField& u);

// Nodal energy density e_x(u) >= 0 with sum_x mu_x e_x(u) = u^T S u; the
// discrete stand-in for |grad u|^2 at a node.
[[nodiscard]] ScalarField energy_density(const SparseOperator& op, const ScalarField& u);

// Dirichlet form pairing u^T S v.
[[nodiscard]] double energy_pairing(const SparseOperator& op, const ScalarField& u,
                                    const ScalarField& v);

[[nodiscard]] double weighted_mean(const SparseOperator& op, const ScalarField& u);

// Nodes coupled to `node` by the stencil (excluding itself), ascending.
[[nodiscard]] std::vector<NodeId> stencil_neighbors(const SparseOperator& op, NodeId node);

// Dense copy of L for oracle checks.
[[nodiscard]] Eigen::MatrixXd dense_laplacian(const SparseOperator& op);

// Coordinate-list export "row,col,value" of S followed by "node,mass".
void write_operator_csv(const SparseOperator& op, std::ostream& triplets, std::ostream& weights);

}  // namespace kahlerlab
