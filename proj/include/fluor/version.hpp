#pragma once

namespace fluor {
inline constexpr const char* kVersion = "0.1.0";
}
