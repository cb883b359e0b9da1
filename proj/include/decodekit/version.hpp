#pragma once

namespace decodekit {
inline constexpr const char* kVersion = "0.3.0";
}
