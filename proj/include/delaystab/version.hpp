#pragma once

namespace delaystab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace delaystab
