#include "kahlerlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "kahlerlab/error.hpp"

namespace kahlerlab {

double nash_yau_entropy(const MetricField& omega, const MetricField& reference, double p) {
  require(std::isfinite(p) && p >= 1.0, ErrorCode::kInvalidArgument, "entropy exponent must be >= 1");
  const ScalarField ef = relative_volume_density(omega, reference);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ef.size(); ++i) {
    const double e = ef(i);
    if (e <= 0.0) continue;
    sum += std::pow(std::abs(std::log(e)), p) * e * reference.volume_density(i);
  }
  return sum * omega.domain.cell_volume();
}

AdmissibilityRecord admissibility_record(const MetricField& omega, const MetricField& reference,
                                         double p, double class_cap, double lambda1) {
  AdmissibilityRecord rec;
  rec.n = omega.domain.complex_dim();
  require(p > rec.n, ErrorCode::kInvalidArgument, "entropy exponent must exceed n");
  rec.p = p;
  rec.class_cap = class_cap;
  rec.entropy = nash_yau_entropy(omega, reference, p);
  rec.gamma_min = omega.gamma_floor.size() > 0 ? omega.gamma_floor.minCoeff() : 0.0;
  rec.gamma_min_positive = rec.gamma_min > 0.0;
  rec.volume = omega.volume;
  rec.intersection = intersection_number(omega, reference);
  rec.lambda1_i = lambda1 * rec.intersection;
  return rec;
}

namespace {

// Both sides vanish, up to rounding, exactly when u is constant.
bool is_constant(const ScalarField& u) {
  const double spread = u.maxCoeff() - u.minCoeff();
  return !(spread > 1e-14 * std::max(1.0, u.cwiseAbs().maxCoeff()));
}

double oscillation_norm(const SparseOperator& op, const ScalarField& u, double q, double volume,
                        bool centered) {
  const double ubar = centered ? weighted_mean(op, u) : 0.0;
  const double m = ((u.array() - ubar).abs().pow(2.0 * q) * op.mass.array()).sum() / volume;
  return std::pow(m, 1.0 / q);
}

}  // namespace

std::optional<QuotientValue> sobolev_quotient(const SparseOperator& op, const ScalarField& u,
                                              double q, double intersection, double volume) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(intersection > 0.0 && volume > 0.0, ErrorCode::kInvalidArgument,
          "intersection number and volume must be positive");
  if (is_constant(u)) return std::nullopt;
  const double energy = dirichlet_energy(op, u);
  if (!(energy > 0.0)) return std::nullopt;
  return QuotientValue{oscillation_norm(op, u, q, volume, true), intersection / volume * energy};
}

std::optional<QuotientValue> sobolev_moser_quotient(const SparseOperator& op, const ScalarField& u,
                                                    double q, double volume) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  require(volume > 0.0, ErrorCode::kInvalidArgument, "volume must be positive");
  const double rhs = (weighted_inner_product(op, u, u) + dirichlet_energy(op, u)) / volume;
  if (!(rhs > 0.0)) return std::nullopt;
  return QuotientValue{oscillation_norm(op, u, q, volume, false), rhs};
}

std::optional<QuotientValue> improved_sobolev_quotient(const SparseOperator& op,
                                                       const ScalarField& u, double p_prime,
                                                       double q_prime, double volume) {
  const int n = op.domain.complex_dim();
  require(n >= 2, ErrorCode::kInvalidArgument,
          "improved Sobolev quotient needs complex dimension >= 2");
  require(p_prime >= 1.0 && p_prime < n, ErrorCode::kInvalidArgument,
          "invalid exponents: need 1 <= p' < n");
  require(q_prime >= p_prime && q_prime < n * p_prime / (n - p_prime),
          ErrorCode::kInvalidArgument, "invalid exponents: need p' <= q' < n p'/(n - p')");
  require(volume > 0.0, ErrorCode::kInvalidArgument, "volume must be positive");
  if (is_constant(u)) return std::nullopt;
  const ScalarField e = energy_density(op, u);
  const double grad = (e.array().pow(p_prime) * op.mass.array()).sum() / volume;
  if (!(grad > 0.0)) return std::nullopt;
  return QuotientValue{oscillation_norm(op, u, q_prime, volume, true),
                       std::pow(grad, 1.0 / p_prime)};
}

std::vector<ScalarField> sobolev_battery(const GridDomain& domain, int count, std::uint64_t seed) {
  require(count >= 0, ErrorCode::kInvalidArgument, "battery size must be >= 0");
  const int d = domain.real_dim();
  const auto nodes = static_cast<Eigen::Index>(domain.node_count());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(count));

  // Squared periodic coordinate distance to a center, in units of side length.
  auto dist2 = [&](Eigen::Index i, const std::vector<double>& c) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double l = domain.side_length(a);
      double dx = domain.position(static_cast<NodeId>(i), a) / l - c[static_cast<std::size_t>(a)];
      dx -= std::round(dx);
      s += dx * dx;
    }
    return s;
  };

  for (int f = 0; f < count; ++f) {
    ScalarField u = ScalarField::Zero(nodes);
    const int kind = f % 4;
    if (kind < 2) {
      const int band = 1 + static_cast<int>(unit(rng) * 3.0);
      const int modes = 6;
      for (int m = 0; m < modes; ++m) {
        std::vector<int> freq(static_cast<std::size_t>(d));
        int norm2 = 0;
        for (auto& k : freq) {
          k = static_cast<int>(std::floor(unit(rng) * (2 * band + 1))) - band;
          norm2 += k * k;
        }
        if (norm2 == 0) {
          freq[static_cast<std::size_t>(m % d)] = 1;
          norm2 = 1;
        }
        const double amp = (2.0 * unit(rng) - 1.0) / (1.0 + norm2);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        for (Eigen::Index i = 0; i < nodes; ++i) {
          double arg = phase;
          for (int a = 0; a < d; ++a)
            arg += 2.0 * std::numbers::pi * freq[static_cast<std::size_t>(a)] *
                   domain.position(static_cast<NodeId>(i), a) / domain.side_length(a);
          u(i) += amp * std::cos(arg);
        }
      }
    } else {
      std::vector<double> c(static_cast<std::size_t>(d));
      for (auto& v : c) v = unit(rng);
      if (kind == 2) {
        const double s = 0.08 + 0.25 * unit(rng);
        for (Eigen::Index i = 0; i < nodes; ++i) u(i) = std::exp(-dist2(i, c) / (2.0 * s * s));
      } else {
        const double radius = 0.15 + 0.3 * unit(rng);
        for (Eigen::Index i = 0; i < nodes; ++i)
          u(i) = std::max(0.0, 1.0 - std::sqrt(dist2(i, c)) / radius);
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

BoundReport sobolev_battery_check(const SparseOperator& op, std::span<const ScalarField> battery,
                                  SobolevForm form, double q, double intersection, double volume,
                                  double p_prime) {
  BoundReport r;
  switch (form) {
    case SobolevForm::kStandard: r.check = "sobolev"; break;
    case SobolevForm::kMoser: r.check = "sobolev_moser"; break;
    case SobolevForm::kImproved: r.check = "improved_sobolev"; break;
  }
  r.fitted_constant = 0.0;
  for (const auto& u : battery) {
    std::optional<QuotientValue> v;
    switch (form) {
      case SobolevForm::kStandard: v = sobolev_quotient(op, u, q, intersection, volume); break;
      case SobolevForm::kMoser: v = sobolev_moser_quotient(op, u, q, volume); break;
      case SobolevForm::kImproved:
        v = improved_sobolev_quotient(op, u, p_prime, q, volume);
        break;
    }
    if (!v) continue;
    ++r.samples;
    if (v->ratio() > r.fitted_constant || r.samples == 1) {
      r.fitted_constant = v->ratio();
      r.lhs = v->lhs;
      r.rhs = v->rhs;
    }
  }
  return r;
}

double BallGeometry::ball_volume(double r) const {
  const auto it = std::find(radii.begin(), radii.end(), r);
  require(it != radii.end(), ErrorCode::kInvalidArgument, "radius not on the ball grid");
  return ball_volumes[static_cast<std::size_t>(it - radii.begin())];
}

double BallGeometry::eccentricity() const {
  return *std::max_element(distances.begin(), distances.end());
}

double step_length(const SparseOperator& op, NodeId node, std::span<const int> delta) {
  const int d = op.domain.real_dim();
  Eigen::VectorXd v(d);
  for (int a = 0; a < d; ++a) v(a) = delta[static_cast<std::size_t>(a)] * op.domain.spacing(a);
  const Eigen::MatrixXd a = op.coefficient(node);
  return std::sqrt(v.dot(a.ldlt().solve(v)));
}

std::vector<double> geodesic_distances(const SparseOperator& op, NodeId center) {
  const GridDomain& dom = op.domain;
  const int d = dom.real_dim();
  const std::size_t n = dom.node_count();
  require(center < n, ErrorCode::kInvalidArgument, "center node out of range");

  // Neighbor steps: every nonzero vector in {-1, 0, 1}^d.
  std::vector<std::vector<int>> steps;
  std::vector<int> s(static_cast<std::size_t>(d), -1);
  for (;;) {
    if (std::any_of(s.begin(), s.end(), [](int v) { return v != 0; })) steps.push_back(s);
    int a = 0;
    while (a < d && s[static_cast<std::size_t>(a)] == 1) s[static_cast<std::size_t>(a++)] = -1;
    if (a == d) break;
    ++s[static_cast<std::size_t>(a)];
  }

  std::vector<Eigen::MatrixXd> inv(n);
  for (NodeId x = 0; x < n; ++x) inv[x] = Eigen::MatrixXd(op.coefficient(x)).inverse();
  auto length = [&](NodeId x, const Eigen::VectorXd& v) { return std::sqrt(v.dot(inv[x] * v)); };

  std::vector<Eigen::VectorXd> vecs;
  for (const auto& st : steps) {
    Eigen::VectorXd v(d);
    for (int a = 0; a < d; ++a) v(a) = st[static_cast<std::size_t>(a)] * dom.spacing(a);
    vecs.push_back(v);
  }

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[center] = 0.0;
  heap.emplace(0.0, center);
  while (!heap.empty()) {
    const auto [dx, x] = heap.top();
    heap.pop();
    if (dx > dist[x]) continue;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const NodeId y = dom.offset(x, steps[k]);
      const double w = 0.5 * (length(x, vecs[k]) + length(y, vecs[k]));
      if (dx + w < dist[y]) {
        dist[y] = dx + w;
        heap.emplace(dist[y], y);
      }
    }
  }
  return dist;
}

BallGeometry geodesic_geometry(const SparseOperator& op, NodeId center,
                               std::span<const double> radii) {
  BallGeometry g;
  g.center = center;
  g.radii.assign(radii.begin(), radii.end());
  g.distances = geodesic_distances(op, center);
  for (double r : g.radii) {
    require(r >= 0.0, ErrorCode::kInvalidArgument, "radii must be >= 0");
    double v = 0.0;
    for (std::size_t x = 0; x < g.distances.size(); ++x)
      if (g.distances[x] <= r) v += op.mass(static_cast<Eigen::Index>(x));
    g.ball_volumes.push_back(v);
  }
  return g;
}

double geodesic_diameter(const SparseOperator& op, std::span<const NodeId> sources) {
  double diam = 0.0;
  for (NodeId s : sources) {
    const auto d = geodesic_distances(op, s);
    diam = std::max(diam, *std::max_element(d.begin(), d.end()));
  }
  return diam;
}

BoundReport noncollapsing_check(std::span<const BallGeometry> balls, double q, double volume) {
  require(q > 1.0, ErrorCode::kInvalidArgument, "q must exceed 1");
  const double e = 2.0 * q / (q - 1.0);
  BoundReport r;
  r.check = "noncollapsing";
  r.kind = CheckKind::kFloor;
  r.fitted_constant = std::numeric_limits<double>::infinity();
  for (const auto& b : balls) {
    for (std::size_t i = 0; i < b.radii.size(); ++i) {
      const double rad = b.radii[i];
      const double ratio = b.ball_volumes[i] / volume;
      if (rad <= 0.0 || ratio > 0.5) continue;
      const double rhs = std::pow(rad, e);
      const double c = ratio / rhs;
      ++r.samples;
      if (c < r.fitted_constant) {
        r.fitted_constant = c;
        r.lhs = ratio;
        r.rhs = rhs;
      }
    }
  }
  return r;
}

double poincare_gap(const SpectralData& spec, double intersection) {
  require(spec.count() >= 2, ErrorCode::kInvalidArgument, "spectrum has no nonzero eigenvalue");
  return spec.eigenvalues(1) * intersection;
}

std::vector<NodeId> spread_nodes(const GridDomain& domain, int count, std::uint64_t seed) {
  const std::size_t n = domain.node_count();
  require(count >= 0 && static_cast<std::size_t>(count) <= n, ErrorCode::kInvalidArgument,
          "sample count exceeds node count");
  std::vector<NodeId> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with an explicit modulus, identical on every platform.
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(all[i], all[j]);
  }
  all.resize(static_cast<std::size_t>(count));
  return all;
}

}  // namespace kahlerlab
