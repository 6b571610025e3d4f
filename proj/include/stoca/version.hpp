#pragma once

namespace stoca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stoca
