#pragma once

namespace snipsde {

inline constexpr const char* version = "0.1.0";

} // namespace snipsde
