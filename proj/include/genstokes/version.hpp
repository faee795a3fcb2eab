#pragma once

namespace genstokes {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace genstokes
