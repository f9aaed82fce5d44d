#pragma once

namespace pdtkit {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace pdtkit
