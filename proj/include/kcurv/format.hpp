#pragma once

#include <cstdio>
#include <string>

namespace kcurv {

/// 17 significant digits: enough for a bit-faithful round trip.
inline std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace kcurv
