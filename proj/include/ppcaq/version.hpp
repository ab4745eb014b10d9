#pragma once

namespace ppcaq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ppcaq
