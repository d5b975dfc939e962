#pragma once

namespace realm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace realm
