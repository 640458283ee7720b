#pragma once

namespace acdcflow {

inline constexpr const char* kVersion = "0.1.0";

}
