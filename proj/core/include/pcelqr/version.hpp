#pragma once

namespace pcelqr {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace pcelqr
