#pragma once

namespace iomdp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iomdp
