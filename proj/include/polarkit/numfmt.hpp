#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace polarkit {

/// Every float in the file formats carries 9 significant digits.
inline std::string format_sig9(double v) {
    if (v == 0.0) return "0";  // also folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Round to the nearest value that format_sig9 reproduces exactly.
inline double round_sig9(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_sig9(v).c_str(), nullptr);
}

}  // namespace polarkit
