#pragma once

#include <stdexcept>
#include <string>

namespace kahlerlab {

// Error categories. The numeric values are mirrored by kl_status in the C API.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidDomain = 2,
  kNotKahler = 3,
  kSingular = 4,
  kSolver = 5,
  kTruncation = 6,
  kQuadratureBudget = 7,
  kPrecondition = 8,
  kIo = 9,
  kConfig = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace kahlerlab
