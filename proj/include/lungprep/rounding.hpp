#pragma once

#include <cmath>
#include <cstdint>

namespace lungprep {

// Every float -> integer conversion in the toolkit goes through here so that
// ties round away from zero regardless of the current FP rounding mode.
inline std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(std::round(x));
}

inline double clamp01(double x) {
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

}  // namespace lungprep
