#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kahlerlab {

using NodeId = std::size_t;

// Periodic lattice on a flat torus of complex dimension n. Real axes are
// ordered (x_1, y_1, x_2, y_2, ...), so axis 2j and 2j+1 carry the real and
// imaginary parts of the complex coordinate z_j.
class GridDomain {
 public:
  GridDomain() = default;
  GridDomain(int complex_dim, std::vector<int> resolution,
             std::vector<double> side_lengths);

  // Same resolution on every real axis.
  static GridDomain uniform(int complex_dim, int resolution,
                            std::vector<double> side_lengths);
  static GridDomain unit(int complex_dim, int resolution);

  [[nodiscard]] int complex_dim() const noexcept { return complex_dim_; }
  [[nodiscard]] int real_dim() const noexcept { return 2 * complex_dim_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return node_count_; }
  [[nodiscard]] int resolution(int axis) const { return resolution_[axis]; }
  [[nodiscard]] double side_length(int axis) const { return side_lengths_[axis]; }
  [[nodiscard]] double spacing(int axis) const {
    return side_lengths_[axis] / resolution_[axis];
  }
  [[nodiscard]] double cell_volume() const noexcept { return cell_volume_; }
  [[nodiscard]] double coordinate_volume() const noexcept;
  [[nodiscard]] const std::vector<int>& resolutions() const noexcept { return resolution_; }
  [[nodiscard]] const std::vector<double>& side_lengths() const noexcept { return side_lengths_; }

  void coords(NodeId node, std::span<int> out) const;
  [[nodiscard]] std::vector<int> coords(NodeId node) const;
  [[nodiscard]] NodeId index(std::span<const int> coords) const;  // wraps periodically
  [[nodiscard]] NodeId shift(NodeId node, int axis, int step) const;
  [[nodiscard]] NodeId offset(NodeId node, std::span<const int> delta) const;
  [[nodiscard]] double position(NodeId node, int axis) const;

  // Shortest periodic coordinate displacement from a to b along one axis.
  [[nodiscard]] double periodic_delta(NodeId a, NodeId b, int axis) const;

  [[nodiscard]] bool same_shape(const GridDomain& other) const;

 private:
  int complex_dim_ = 0;
  std::vector<int> resolution_;
  std::vector<double> side_lengths_;
  std::vector<std::size_t> stride_;
  std::size_t node_count_ = 0;
  double cell_volume_ = 0.0;
};

}  // namespace kahlerlab
