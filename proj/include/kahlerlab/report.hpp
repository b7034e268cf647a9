#pragma once

#include <cstddef>
#include <limits>
#include <string>

namespace kahlerlab {

// How a fitted constant is judged across a family sweep.
enum class CheckKind {
  kUpper,  // sup-type constant: bounded, uniform across members
  kFloor,  // inf-type constant: bounded away from zero
  kLimit,  // explicit ceiling: fitted <= limit on every member
};

// One evaluated inequality lhs <= C * rhs on one metric.
struct BoundReport {
  std::string check;
  CheckKind kind = CheckKind::kUpper;
  double lhs = 0.0;
  double rhs = 0.0;
  double fitted_constant = 0.0;
  double limit = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;

  // Distance to failure: limit - fitted for ceilings, fitted for floors and
  // +inf for upper checks without a ceiling.
  [[nodiscard]] double margin() const {
    switch (kind) {
      case CheckKind::kFloor: return fitted_constant;
      case CheckKind::kLimit: return limit - fitted_constant;
      case CheckKind::kUpper: break;
    }
    return std::numeric_limits<double>::infinity();
  }

  // Member-level verdict; uniformity across members is judged by the sweep.
  [[nodiscard]] bool passed() const {
    switch (kind) {
      case CheckKind::kFloor: return fitted_constant > 0.0 && fitted_constant < std::numeric_limits<double>::infinity();
      case CheckKind::kLimit: return fitted_constant <= limit;
      case CheckKind::kUpper: break;
    }
    return fitted_constant >= 0.0 && fitted_constant < std::numeric_limits<double>::infinity();
  }
};

}  // namespace kahlerlab
