#include "kahlerlab/grid.hpp"

#include <cmath>
#include <string>

#include "kahlerlab/error.hpp"

namespace kahlerlab {

GridDomain::GridDomain(int complex_dim, std::vector<int> resolution,
                       std::vector<double> side_lengths)
    : complex_dim_(complex_dim),
      resolution_(std::move(resolution)),
      side_lengths_(std::move(side_lengths)) {
  require(complex_dim_ >= 1, ErrorCode::kInvalidDomain,
          "complex dimension must be >= 1");
  const auto axes = static_cast<std::size_t>(real_dim());
  require(resolution_.size() == axes && side_lengths_.size() == axes,
          ErrorCode::kInvalidDomain,
          "expected " + std::to_string(axes) + " resolutions and side lengths");
  stride_.resize(axes);
  node_count_ = 1;
  cell_volume_ = 1.0;
  for (std::size_t a = 0; a < axes; ++a) {
    require(resolution_[a] >= 4, ErrorCode::kInvalidDomain,
            "resolution on axis " + std::to_string(a) + " must be >= 4");
    require(std::isfinite(side_lengths_[a]) && side_lengths_[a] > 0.0,
            ErrorCode::kInvalidDomain,
            "side length on axis " + std::to_string(a) + " must be positive");
    stride_[a] = node_count_;
    node_count_ *= static_cast<std::size_t>(resolution_[a]);
    cell_volume_ *= spacing(static_cast<int>(a));
  }
}

GridDomain GridDomain::uniform(int complex_dim, int resolution,
                               std::vector<double> side_lengths) {
  require(complex_dim >= 1, ErrorCode::kInvalidDomain,
          "complex dimension must be >= 1");
  return GridDomain(complex_dim,
                    std::vector<int>(static_cast<std::size_t>(2 * complex_dim), resolution),
                    std::move(side_lengths));
}

GridDomain GridDomain::unit(int complex_dim, int resolution) {
  require(complex_dim >= 1, ErrorCode::kInvalidDomain,
          "complex dimension must be >= 1");
  return uniform(complex_dim, resolution,
                 std::vector<double>(static_cast<std::size_t>(2 * complex_dim), 1.0));
}

double GridDomain::coordinate_volume() const noexcept {
  double v = 1.0;
  for (double l : side_lengths_) v *= l;
  return v;
}

void GridDomain::coords(NodeId node, std::span<int> out) const {
  for (std::size_t a = 0; a < resolution_.size(); ++a) {
    out[a] = static_cast<int>(node % static_cast<std::size_t>(resolution_[a]));
    node /= static_cast<std::size_t>(resolution_[a]);
  }
}

std::vector<int> GridDomain::coords(NodeId node) const {
  std::vector<int> c(resolution_.size());
  coords(node, c);
  return c;
}

NodeId GridDomain::index(std::span<const int> c) const {
  NodeId id = 0;
  for (std::size_t a = 0; a < resolution_.size(); ++a) {
    const int m = resolution_[a];
    const int w = ((c[a] % m) + m) % m;
    id += static_cast<std::size_t>(w) * stride_[a];
  }
  return id;
}

NodeId GridDomain::shift(NodeId node, int axis, int step) const {
  const auto m = static_cast<std::size_t>(resolution_[axis]);
  const std::size_t s = stride_[axis];
  const std::size_t c = (node / s) % m;
  const auto w = static_cast<std::size_t>(
      ((static_cast<long>(c) + step) % static_cast<long>(m) + static_cast<long>(m)) %
      static_cast<long>(m));
  return node - c * s + w * s;
}

NodeId GridDomain::offset(NodeId node, std::span<const int> delta) const {
  for (std::size_t a = 0; a < delta.size(); ++a) {
    if (delta[a] != 0) node = shift(node, static_cast<int>(a), delta[a]);
  }
  return node;
}

double GridDomain::position(NodeId node, int axis) const {
  const auto m = static_cast<std::size_t>(resolution_[axis]);
  const std::size_t c = (node / stride_[axis]) % m;
  return static_cast<double>(c) * spacing(axis);
}

double GridDomain::periodic_delta(NodeId a, NodeId b, int axis) const {
  const double l = side_lengths_[axis];
  double d = position(b, axis) - position(a, axis);
  d -= l * std::round(d / l);
  return d;
}

bool GridDomain::same_shape(const GridDomain& other) const {
  return complex_dim_ == other.complex_dim_ && resolution_ == other.resolution_ &&
         side_lengths_ == other.side_lengths_;
}

}  // namespace kahlerlab
