#pragma once

namespace semlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace semlab
