#pragma once

namespace vprcal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vprcal
