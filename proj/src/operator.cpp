#include "kahlerlab/operator.hpp"

#include <algorithm>
#include <ostream>

#include "kahlerlab/csv.hpp"
#include "kahlerlab/error.hpp"

namespace kahlerlab {

Eigen::Map<const Eigen::MatrixXd> SparseOperator::coefficient(NodeId node) const {
  const int d = domain.real_dim();
  return {coeffs.data() + node * static_cast<std::size_t>(d * d), d, d};
}

ScalarField SparseOperator::apply(const ScalarField& u) const {
  ScalarField su = stiffness * u;
  return -su.cwiseQuotient(mass);
}

double GradientField::energy() const {
  double e = 0.0;
  for (const auto& edge : edges) e += edge.conductance * edge.difference * edge.difference;
  return e;
}

// The nodal form is
//   e_x(u) = sum_a A_aa (|D+_a u|^2 + |D-_a u|^2) / 2 + sum_{a != b} A_ab D0_a u D0_b u,
// which dominates D0^T A D0 >= 0, so S = sum_x mu_x e_x is positive
// semidefinite for any positive metric regardless of the sign pattern of its
// off-diagonal entries.
SparseOperator assemble_laplacian(const MetricField& metric) {
  const GridDomain& dom = metric.domain;
  const int d = dom.real_dim();
  const std::size_t count = dom.node_count();
  require(metric.volume_density.size() == static_cast<Eigen::Index>(count) &&
              metric.inverse_metric.size() ==
                  count * static_cast<std::size_t>(dom.complex_dim() * dom.complex_dim()),
          ErrorCode::kInvalidArgument, "metric field is incomplete");

  SparseOperator op;
  op.domain = dom;
  op.mass.resize(static_cast<Eigen::Index>(count));
  op.coeffs.resize(count * static_cast<std::size_t>(d * d));
  const double cell = dom.cell_volume();

  for (NodeId x = 0; x < count; ++x) {
    const double rho = metric.volume_density(static_cast<Eigen::Index>(x));
    require(std::isfinite(rho) && rho > 0.0, ErrorCode::kNotKahler,
            "volume density is not positive at node " + std::to_string(x));
    const Eigen::MatrixXd a = metric.real_coefficients(x);
    require(a.allFinite(), ErrorCode::kNotKahler,
            "inverse metric is not finite at node " + std::to_string(x));
    for (int k = 0; k < d; ++k)
      require(a(k, k) > 0.0, ErrorCode::kNotKahler,
              "metric is not positive at node " + std::to_string(x));
    std::copy(a.data(), a.data() + d * d, op.coeffs.begin() + static_cast<long>(x * d * d));
    op.mass(static_cast<Eigen::Index>(x)) = rho * cell;
  }
  op.volume = op.mass.sum();

  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(count * static_cast<std::size_t>(4 * d + 8 * d * (d - 1)));
  auto add_edge = [&](NodeId i, NodeId j, double w) {
    const int a = static_cast<int>(i), b = static_cast<int>(j);
    trip.emplace_back(a, a, w);
    trip.emplace_back(b, b, w);
    trip.emplace_back(a, b, -w);
    trip.emplace_back(b, a, -w);
  };

  for (NodeId x = 0; x < count; ++x) {
    const double mu = op.mass(static_cast<Eigen::Index>(x));
    const auto a = op.coefficient(x);
    for (int ax = 0; ax < d; ++ax) {
      const double h = dom.spacing(ax);
      const double w = 0.5 * mu * a(ax, ax) / (h * h);
      add_edge(x, dom.shift(x, ax, 1), w);
      add_edge(dom.shift(x, ax, -1), x, w);
    }
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = 0.5 * (a(p, q) + a(q, p));
        if (apq == 0.0) continue;
        // 2 A_pq D0_p u D0_q u = kappa (u_{+p} - u_{-p})(u_{+q} - u_{-q})
        const double kappa = 2.0 * apq * mu / (4.0 * dom.spacing(p) * dom.spacing(q));
        const NodeId pp = dom.shift(x, p, 1), pm = dom.shift(x, p, -1);
        const NodeId qp = dom.shift(x, q, 1), qm = dom.shift(x, q, -1);
        trip.emplace_back(static_cast<int>(pp), static_cast<int>(qp), 0.5 * kappa);
        trip.emplace_back(static_cast<int>(qp), static_cast<int>(pp), 0.5 * kappa);
        trip.emplace_back(static_cast<int>(pm), static_cast<int>(qm), 0.5 * kappa);
        trip.emplace_back(static_cast<int>(qm), static_cast<int>(pm), 0.5 * kappa);
        trip.emplace_back(static_cast<int>(pp), static_cast<int>(qm), -0.5 * kappa);
        trip.emplace_back(static_cast<int>(qm), static_cast<int>(pp), -0.5 * kappa);
        trip.emplace_back(static_cast<int>(pm), static_cast<int>(qp), -0.5 * kappa);
        trip.emplace_back(static_cast<int>(qp), static_cast<int>(pm), -0.5 * kappa);
      }
    }
  }

  const auto n = static_cast<int>(count);
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(trip.begin(), trip.end());
  op.stiffness.makeCompressed();

  // Re-derive the diagonal from the off-diagonal entries so that S 1 = 0
  // holds to the last bit rather than up to summation order.
  std::vector<double> rowsum(count, 0.0);
  for (int col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
      if (it.row() != col) rowsum[static_cast<std::size_t>(col)] += it.value();
    }
  }
  for (int col = 0; col < n; ++col) {
    op.stiffness.coeffRef(col, col) = -rowsum[static_cast<std::size_t>(col)];
  }
  op.stiffness.prune(0.0);

  for (int col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
      if (it.row() < col && it.value() > 0.0) ++op.negative_conductances;
    }
  }
  return op;
}

double dirichlet_energy(const SparseOperator& op, const ScalarField& u) {
  require(u.size() == op.mass.size(), ErrorCode::kInvalidArgument,
          "field size does not match the operator");
  return std::max(0.0, u.dot(op.stiffness * u));
}

double energy_pairing(const SparseOperator& op, const ScalarField& u, const ScalarField& v) {
  require(u.size() == op.mass.size() && v.size() == op.mass.size(),
          ErrorCode::kInvalidArgument, "field size does not match the operator");
  return u.dot(op.stiffness * v);
}

double weighted_inner_product(const SparseOperator& op, const ScalarField& u,
                              const ScalarField& v) {
  require(u.size() == op.mass.size() && v.size() == op.mass.size(),
          ErrorCode::kInvalidArgument, "field size does not match the operator");
  return (u.array() * v.array() * op.mass.array()).sum();
}

double weighted_mean(const SparseOperator& op, const ScalarField& u) {
  return u.dot(op.mass) / op.volume;
}

GradientField gradient_field(const SparseOperator& op, const ScalarField& u) {
  require(u.size() == op.mass.size(), ErrorCode::kInvalidArgument,
          "field size does not match the operator");
  GradientField g;
  const auto n = static_cast<int>(op.size());
  for (int col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
      if (it.row() >= col) continue;
      const auto i = static_cast<NodeId>(it.row());
      const auto j = static_cast<NodeId>(col);
      g.edges.push_back({i, j, -it.value(), u(col) - u(it.row())});
    }
  }
  return g;
}

ScalarField energy_density(const SparseOperator& op, const ScalarField& u) {
  require(u.size() == op.mass.size(), ErrorCode::kInvalidArgument,
          "field size does not match the operator");
  const GridDomain& dom = op.domain;
  const int d = dom.real_dim();
  ScalarField e(u.size());
  std::vector<double> central(static_cast<std::size_t>(d));
  for (NodeId x = 0; x < op.size(); ++x) {
    const auto a = op.coefficient(x);
    const double ux = u(static_cast<Eigen::Index>(x));
    double s = 0.0;
    for (int ax = 0; ax < d; ++ax) {
      const double h = dom.spacing(ax);
      const double up = u(static_cast<Eigen::Index>(dom.shift(x, ax, 1)));
      const double um = u(static_cast<Eigen::Index>(dom.shift(x, ax, -1)));
      const double dp = (up - ux) / h;
      const double dm = (ux - um) / h;
      s += a(ax, ax) * 0.5 * (dp * dp + dm * dm);
      central[static_cast<std::size_t>(ax)] = (up - um) / (2.0 * h);
    }
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q)
        s += (a(p, q) + a(q, p)) * central[static_cast<std::size_t>(p)] *
             central[static_cast<std::size_t>(q)];
    e(static_cast<Eigen::Index>(x)) = std::max(0.0, s);
  }
  return e;
}

std::vector<NodeId> stencil_neighbors(const SparseOperator& op, NodeId node) {
  std::vector<NodeId> out;
  const auto col = static_cast<int>(node);
  for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) {
    if (it.row() != col) out.push_back(static_cast<NodeId>(it.row()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd dense_laplacian(const SparseOperator& op) {
  Eigen::MatrixXd l = -Eigen::MatrixXd(op.stiffness);
  for (Eigen::Index i = 0; i < l.rows(); ++i) l.row(i) /= op.mass(i);
  return l;
}

void write_operator_csv(const SparseOperator& op, std::ostream& triplets, std::ostream& weights) {
  triplets << "row,col,value\n";
  const auto n = static_cast<int>(op.size());
  for (int col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it)
      triplets << it.row() << ',' << col << ',' << format_number(it.value()) << '\n';
  }
  weights << "node,mass\n";
  for (Eigen::Index i = 0; i < op.mass.size(); ++i)
    weights << i << ',' << format_number(op.mass(i)) << '\n';
}

}  // namespace kahlerlab
