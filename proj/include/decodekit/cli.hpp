#pragma once

#include <string>
#include <vector>

namespace decodekit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kSpecInvalid = 2;
inline constexpr int kDecodeFailed = 3;
inline constexpr int kEvalIncomplete = 4;
inline constexpr int kCrossmodelFailed = 5;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args);

}  // namespace decodekit::cli
