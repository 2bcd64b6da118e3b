#pragma once

#define GMMB_VERSION_STRING "0.3.0"

namespace gmmb {
inline constexpr const char* version() { return GMMB_VERSION_STRING; }
}  // namespace gmmb
