#pragma once

// Shared fixtures, generators and independent oracles for the test suite.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "kahlerlab/geometry.hpp"
#include "kahlerlab/operator.hpp"

namespace kltest {

using namespace kahlerlab;

inline constexpr double kPi = std::numbers::pi;

inline GridDomain unit_torus(int n, int res) { return GridDomain::unit(n, res); }

inline SparseOperator flat_operator(int n, int res) {
  return assemble_laplacian(build_flat_torus(unit_torus(n, res), true));
}

// Seeded generator of smooth and rough test fields.
class FieldGen {
 public:
  explicit FieldGen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

  ScalarField noise(std::size_t n) {
    ScalarField u(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = uniform(-1.0, 1.0);
    return u;
  }

  // Random trigonometric polynomial with frequencies up to band on each axis.
  ScalarField smooth(const GridDomain& d, int band, int modes) {
    ScalarField u = ScalarField::Zero(static_cast<Eigen::Index>(d.node_count()));
    for (int m = 0; m < modes; ++m) {
      std::vector<int> k(static_cast<std::size_t>(d.real_dim()));
      for (auto& v : k) v = integer(-band, band);
      const double amp = uniform(-1.0, 1.0);
      const double phase = uniform(0.0, 2.0 * kPi);
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        double arg = phase;
        for (int a = 0; a < d.real_dim(); ++a)
          arg += 2.0 * kPi * k[static_cast<std::size_t>(a)] * d.position(static_cast<NodeId>(i), a) /
                 d.side_length(a);
        u(i) += amp * std::cos(arg);
      }
    }
    return u;
  }

  NodeId node(const GridDomain& d) {
    return static_cast<NodeId>(integer(0, static_cast<int>(d.node_count()) - 1));
  }

 private:
  std::mt19937_64 rng_;
};

// Exact spectrum of the discrete flat operator: the stencil reduces to the
// standard second difference on each axis, so every lattice frequency is an
// eigenvector with symbol sum_a A_aa (2 sin(pi k_a / N_a) / h_a)^2.
struct FlatDft {
  GridDomain domain;
  double coefficient = 0.25;  // A_aa
  double volume = 1.0;

  double symbol(const std::vector<int>& k) const {
    double s = 0.0;
    for (int a = 0; a < domain.real_dim(); ++a) {
      const double h = domain.spacing(a);
      const double v = 2.0 * std::sin(kPi * k[static_cast<std::size_t>(a)] / domain.resolution(a)) / h;
      s += coefficient * v * v;
    }
    return s;
  }

  template <class F>
  void for_each_frequency(F&& f) const {
    std::vector<int> k(static_cast<std::size_t>(domain.real_dim()), 0);
    for (std::size_t i = 0; i < domain.node_count(); ++i) {
      f(k);
      for (int a = 0; a < domain.real_dim(); ++a) {
        if (++k[static_cast<std::size_t>(a)] < domain.resolution(a)) break;
        k[static_cast<std::size_t>(a)] = 0;
      }
    }
  }

  double phase(const std::vector<int>& k, NodeId x, NodeId y) const {
    const auto cx = domain.coords(x);
    const auto cy = domain.coords(y);
    double arg = 0.0;
    for (int a = 0; a < domain.real_dim(); ++a)
      arg += 2.0 * kPi * k[static_cast<std::size_t>(a)] * (cx[static_cast<std::size_t>(a)] - cy[static_cast<std::size_t>(a)]) /
             domain.resolution(a);
    return std::cos(arg);
  }

  double heat(NodeId x, NodeId y, double t) const {
    double s = 0.0;
    for_each_frequency([&](const std::vector<int>& k) { s += std::exp(-t * symbol(k)) * phase(k, x, y); });
    return s / volume;
  }

  double green(NodeId x, NodeId y) const {
    double s = 0.0;
    for_each_frequency([&](const std::vector<int>& k) {
      const double l = symbol(k);
      if (l > 1e-12) s += phase(k, x, y) / l;
    });
    return s / volume;
  }

  std::vector<double> sorted_eigenvalues() const {
    std::vector<double> out;
    for_each_frequency([&](const std::vector<int>& k) { out.push_back(symbol(k)); });
    std::sort(out.begin(), out.end());
    return out;
  }
};

// H(t) = exp(tL) as kernel against mu: H(x,y,t) = exp(tL)(x,y) / mu_y.
inline Eigen::MatrixXd expm_heat(const SparseOperator& op, double t) {
  const Eigen::MatrixXd l = dense_laplacian(op);
  Eigen::MatrixXd e = (t * l).exp();
  for (Eigen::Index y = 0; y < e.cols(); ++y) e.col(y) /= op.mass(y);
  return e;
}

}  // namespace kltest
