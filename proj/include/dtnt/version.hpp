#pragma once

namespace dtnt {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dtnt
