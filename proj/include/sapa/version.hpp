#pragma once

namespace sapa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sapa
