#pragma once

namespace imcmc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace imcmc
