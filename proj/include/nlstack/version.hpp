#pragma once

namespace nlstack {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nlstack
