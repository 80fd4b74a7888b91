#pragma once

namespace lpforge {

inline constexpr const char* kVersionString = "lpforge 0.1.0";

}
