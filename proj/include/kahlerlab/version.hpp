#pragma once

namespace kahlerlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kahlerlab
