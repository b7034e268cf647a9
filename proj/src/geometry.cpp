#include "kahlerlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "kahlerlab/csv.hpp"
#include "kahlerlab/error.hpp"

namespace kahlerlab {

namespace {

using Cplx = std::complex<double>;

Eigen::MatrixXcd load(const std::vector<Cplx>& data, NodeId node, int n) {
  Eigen::MatrixXcd m(n, n);
  const std::size_t base = node * static_cast<std::size_t>(n * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) m(j, k) = data[base + static_cast<std::size_t>(j * n + k)];
  return m;
}

void store(std::vector<Cplx>& data, NodeId node, const Eigen::MatrixXcd& m) {
  const auto n = static_cast<int>(m.rows());
  const std::size_t base = node * static_cast<std::size_t>(n * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) data[base + static_cast<std::size_t>(j * n + k)] = m(j, k);
}

double min_eigenvalue(const Eigen::MatrixXcd& g) {
  if (g.rows() == 1) return g(0, 0).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Fills inverse metric, densities and volume from the stored metric. The
// reference density must already be set.
void finalize(MetricField& omega) {
  const std::size_t count = omega.node_count();
  omega.inverse_metric.resize(omega.metric.size());
  omega.volume_density.resize(static_cast<Eigen::Index>(count));
  for (NodeId x = 0; x < count; ++x) {
    const Eigen::MatrixXcd g = omega.metric_at(x);
    // g^{j kbar} g_{l kbar} = delta_{jl}, i.e. the transpose of the matrix inverse.
    store(omega.inverse_metric, x, g.inverse().transpose());
    omega.volume_density(static_cast<Eigen::Index>(x)) = g.determinant().real();
  }
  omega.volume = omega.volume_density.sum() * omega.domain.cell_volume();
  omega.relative_density.resize(omega.volume_density.size());
  for (Eigen::Index i = 0; i < omega.relative_density.size(); ++i) {
    require(omega.reference_density(i) > 0.0, ErrorCode::kSingular,
            "reference density vanishes at node " + std::to_string(i));
    omega.relative_density(i) =
        omega.volume_density(i) / (omega.volume * omega.reference_density(i));
  }
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

const char* family_kind_name(FamilyKind kind) noexcept {
  switch (kind) {
    case FamilyKind::kProductCollapse: return "product_collapse";
    case FamilyKind::kPotentialPinch: return "potential_pinch";
    case FamilyKind::kScaling: return "scaling";
  }
  return "unknown";
}

FamilyKind parse_family_kind(const std::string& name) {
  if (name == "product_collapse") return FamilyKind::kProductCollapse;
  if (name == "potential_pinch") return FamilyKind::kPotentialPinch;
  if (name == "scaling") return FamilyKind::kScaling;
  fail(ErrorCode::kInvalidArgument, "unknown family kind '" + name + "'");
}

Eigen::MatrixXcd MetricField::metric_at(NodeId node) const {
  return load(metric, node, domain.complex_dim());
}

Eigen::MatrixXcd MetricField::inverse_at(NodeId node) const {
  return load(inverse_metric, node, domain.complex_dim());
}

Eigen::MatrixXd MetricField::real_coefficients(NodeId node) const {
  const int n = domain.complex_dim();
  const Eigen::MatrixXcd h = inverse_at(node);
  Eigen::MatrixXd a(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const double re = 0.25 * h(j, k).real();
      const double im = 0.25 * h(j, k).imag();
      a(2 * j, 2 * k) = re;
      a(2 * j + 1, 2 * k + 1) = re;
      a(2 * j, 2 * k + 1) = -im;
      a(2 * j + 1, 2 * k) = im;
    }
  }
  return a;
}

double MetricField::min_metric_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (NodeId x = 0; x < node_count(); ++x) m = std::min(m, min_eigenvalue(metric_at(x)));
  return m;
}

MetricField build_flat_torus(const GridDomain& domain, bool normalize_volume) {
  const int n = domain.complex_dim();
  const std::size_t count = domain.node_count();
  const double scale =
      normalize_volume ? std::pow(domain.coordinate_volume(), -1.0 / n) : 1.0;
  MetricField omega;
  omega.domain = domain;
  omega.metric.assign(count * static_cast<std::size_t>(n * n), Cplx{});
  for (NodeId x = 0; x < count; ++x)
    for (int j = 0; j < n; ++j)
      omega.metric[x * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(j * n + j)] = scale;
  omega.reference_density =
      ScalarField::Constant(static_cast<Eigen::Index>(count), std::pow(scale, n));
  finalize(omega);
  omega.gamma_floor = ScalarField::Ones(static_cast<Eigen::Index>(count));
  return omega;
}

MetricField perturb_with_potential(const MetricField& base, const KahlerPotential& phi,
                                   double positivity_margin) {
  const GridDomain& dom = base.domain;
  const int n = dom.complex_dim();
  const auto count = static_cast<Eigen::Index>(dom.node_count());
  require(phi.values.size() == count, ErrorCode::kInvalidArgument,
          "potential is not sampled on the metric's grid");
  require(phi.values.allFinite(), ErrorCode::kInvalidArgument,
          "potential has non-finite samples");

  MetricField omega;
  omega.domain = dom;
  omega.metric = base.metric;
  omega.reference_density = base.reference_density;

  const auto& f = phi.values;
  auto second = [&](NodeId x, int a, int b) {
    const double ha = dom.spacing(a);
    const double hb = dom.spacing(b);
    if (a == b) {
      return (f(static_cast<Eigen::Index>(dom.shift(x, a, 1))) - 2.0 * f(static_cast<Eigen::Index>(x)) +
              f(static_cast<Eigen::Index>(dom.shift(x, a, -1)))) /
             (ha * ha);
    }
    const NodeId pp = dom.shift(dom.shift(x, a, 1), b, 1);
    const NodeId pm = dom.shift(dom.shift(x, a, 1), b, -1);
    const NodeId mp = dom.shift(dom.shift(x, a, -1), b, 1);
    const NodeId mm = dom.shift(dom.shift(x, a, -1), b, -1);
    return (f(static_cast<Eigen::Index>(pp)) - f(static_cast<Eigen::Index>(pm)) -
            f(static_cast<Eigen::Index>(mp)) + f(static_cast<Eigen::Index>(mm))) /
           (4.0 * ha * hb);
  };

  double worst = std::numeric_limits<double>::infinity();
  NodeId worst_node = 0;
  for (NodeId x = 0; x < dom.node_count(); ++x) {
    Eigen::MatrixXcd g = base.metric_at(x);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
        const double re = 0.25 * (second(x, xj, xk) + second(x, yj, yk));
        const double im = j == k ? 0.0 : 0.25 * (second(x, xj, yk) - second(x, yj, xk));
        g(j, k) += Cplx(re, im);
      }
    }
    const double lo = min_eigenvalue(g);
    if (lo < worst) {
      worst = lo;
      worst_node = x;
    }
    store(omega.metric, x, g);
  }
  if (worst < positivity_margin) {
    fail(ErrorCode::kNotKahler,
         "potential breaks positivity: smallest metric eigenvalue " + format_number(worst) +
             " < margin " + format_number(positivity_margin) + " at node " +
             std::to_string(worst_node));
  }
  finalize(omega);
  omega.gamma_floor =
      ScalarField::Constant(count, 0.9 * omega.relative_density.minCoeff());
  omega.vanishing_set = "empty";
  return omega;
}

MetricField build_degenerating_product_family(const FamilyParameter& t, const GridDomain& domain,
                                              int fiber_dims) {
  const int n = domain.complex_dim();
  require(std::isfinite(t.t) && t.t > 0.0, ErrorCode::kInvalidArgument,
          "family parameter t must be positive");
  require(t.t <= 1.0, ErrorCode::kInvalidArgument,
          "product collapse parameter must lie in (0, 1]");
  require(n >= 2, ErrorCode::kInvalidArgument, "product family needs complex dimension >= 2");
  require(fiber_dims >= 1 && fiber_dims < n, ErrorCode::kInvalidArgument,
          "fiber dimension must lie in [1, n-1]");

  MetricField omega = build_flat_torus(domain, true);
  const auto nn = static_cast<std::size_t>(n * n);
  for (NodeId x = 0; x < domain.node_count(); ++x) {
    for (int j = 0; j < n; ++j) {
      Cplx& g = omega.metric[x * nn + static_cast<std::size_t>(j * n + j)];
      g *= j < fiber_dims ? t.t : t.t + 1.0;
    }
  }
  finalize(omega);
  // (pi^* omega_Y)^m wedge omega_X^{n-m} / omega_X^n for a flat product.
  const int base_dims = n - fiber_dims;
  omega.gamma_floor = ScalarField::Constant(static_cast<Eigen::Index>(domain.node_count()),
                                            1.0 / binomial(n, base_dims));
  omega.vanishing_set = "empty (Jacobian of the product projection is constant)";
  return omega;
}

KahlerPotential pinch_potential(const GridDomain& domain, double t, double amplitude) {
  require(std::isfinite(t) && t > 0.0 && t <= 1.0, ErrorCode::kInvalidArgument,
          "pinch parameter must lie in (0, 1]");
  require(amplitude >= 0.0 && amplitude < 1.0, ErrorCode::kInvalidArgument,
          "pinch amplitude must lie in [0, 1)");
  const int n = domain.complex_dim();
  const double c = std::pow(domain.coordinate_volume(), -1.0 / n);
  KahlerPotential phi;
  phi.values = ScalarField::Zero(static_cast<Eigen::Index>(domain.node_count()));
  // Each axis contributes -(c a (1-t)/2) cos(2 pi x / L) to g_{j jbar}.
  for (int a = 0; a < domain.real_dim(); ++a) {
    const double k = 2.0 * std::numbers::pi / domain.side_length(a);
    const double coeff = 2.0 * c * amplitude * (1.0 - t) / (k * k);
    for (NodeId x = 0; x < domain.node_count(); ++x)
      phi.values(static_cast<Eigen::Index>(x)) += coeff * std::cos(k * domain.position(x, a));
  }
  return phi;
}

MetricField build_family_member(const FamilyParameter& parameter, const GridDomain& domain,
                                int fiber_dims) {
  switch (parameter.kind) {
    case FamilyKind::kProductCollapse:
      return build_degenerating_product_family(parameter, domain, fiber_dims);
    case FamilyKind::kPotentialPinch: {
      const MetricField flat = build_flat_torus(domain, true);
      const double c = std::pow(domain.coordinate_volume(), -1.0 / domain.complex_dim());
      return perturb_with_potential(flat, pinch_potential(domain, parameter.t, 0.9),
                                    1e-3 * c);
    }
    case FamilyKind::kScaling:
      require(std::isfinite(parameter.t) && parameter.t > 0.0, ErrorCode::kInvalidArgument,
              "family parameter t must be positive");
      return scale_metric(build_flat_torus(domain, true), parameter.t);
  }
  fail(ErrorCode::kInvalidArgument, "unknown family kind");
}

MetricField scale_metric(const MetricField& omega, double c) {
  require(std::isfinite(c) && c > 0.0, ErrorCode::kInvalidArgument,
          "scale factor must be positive");
  MetricField out = omega;
  for (auto& v : out.metric) v *= c;
  finalize(out);
  out.gamma_floor = omega.gamma_floor;
  out.vanishing_set = omega.vanishing_set;
  return out;
}

ScalarField relative_volume_density(const MetricField& omega, const MetricField& reference) {
  require(omega.domain.same_shape(reference.domain), ErrorCode::kInvalidArgument,
          "metrics live on different grids");
  const double v = omega.volume_density.sum() * omega.domain.cell_volume();
  ScalarField out(omega.volume_density.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double ref = reference.volume_density(i);
    require(ref > 0.0, ErrorCode::kSingular,
            "reference density vanishes at node " + std::to_string(i));
    out(i) = omega.volume_density(i) / (v * ref);
  }
  return out;
}

double intersection_number(const MetricField& omega, const MetricField& reference) {
  require(omega.domain.same_shape(reference.domain), ErrorCode::kInvalidArgument,
          "metrics live on different grids");
  const int n = omega.domain.complex_dim();
  double sum = 0.0;
  for (NodeId x = 0; x < omega.node_count(); ++x) {
    const Eigen::MatrixXcd gx = reference.metric_at(x);
    const Eigen::MatrixXcd g = omega.metric_at(x);
    // Mixed discriminant D(g, gx, ..., gx) = det(gx) tr(gx^{-1} g) / n.
    const double mixed = gx.determinant().real() * (gx.inverse() * g).trace().real() / n;
    sum += mixed;
  }
  return sum * omega.domain.cell_volume();
}

double relative_density_mass(const MetricField& omega) {
  return omega.relative_density.dot(omega.reference_density) * omega.domain.cell_volume();
}

void write_metric_csv(const MetricField& omega, std::ostream& out) {
  const int n = omega.domain.complex_dim();
  const int d = omega.domain.real_dim();
  out << "node";
  for (int a = 0; a < d; ++a) out << ",x" << a;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) out << ",ginv_re_" << j << k << ",ginv_im_" << j << k;
  out << ",volume_density,relative_density,gamma_floor\n";
  for (NodeId x = 0; x < omega.node_count(); ++x) {
    out << x;
    for (int a = 0; a < d; ++a) out << ',' << format_number(omega.domain.position(x, a));
    const Eigen::MatrixXcd h = omega.inverse_at(x);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out << ',' << format_number(h(j, k).real()) << ',' << format_number(h(j, k).imag());
    const auto i = static_cast<Eigen::Index>(x);
    out << ',' << format_number(omega.volume_density(i)) << ','
        << format_number(omega.relative_density(i)) << ',' << format_number(omega.gamma_floor(i))
        << '\n';
  }
}

}  // namespace kahlerlab
