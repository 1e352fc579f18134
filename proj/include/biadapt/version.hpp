#pragma once

namespace biadapt {
inline constexpr const char* kVersion = "0.1.0";
}
