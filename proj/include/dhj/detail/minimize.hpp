#pragma once

#include <cmath>

namespace dhj::detail {

struct ScalarMin {
    double arg;
    double value;
};

/// Number of golden-section contractions needed to shrink `width` below `tol`.
inline int golden_iterations(double width, double tol) {
    if (width <= tol) return 0;
    constexpr double kInvPhi = 0.6180339887498949;
    return static_cast<int>(std::ceil(std::log(tol / width) / std::log(kInvPhi)));
}

/// Golden-section search on [lo, hi] with a fixed iteration count. Returns the
/// best point evaluated, seeded with (seed_arg, seed_value) so the result is
/// never worse than the caller's coarse sample.
template <class F>
ScalarMin golden_minimize(F &&f, double lo, double hi, int iterations, double seed_arg,
                          double seed_value) {
    constexpr double kInvPhi = 0.6180339887498949;
    ScalarMin best{seed_arg, seed_value};
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    if (fc < best.value) best = {c, fc};
    if (fd < best.value) best = {d, fd};
    for (int it = 0; it < iterations; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            if (fc < best.value) best = {c, fc};
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            if (fd < best.value) best = {d, fd};
        }
    }
    return best;
}

} // namespace dhj::detail
