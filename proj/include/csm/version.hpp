#pragma once

namespace csm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace csm
