#pragma once

#include <array>
#include <cmath>

namespace dhj {

/// Point, velocity or covector on T^1 / T^2. Only the first `dim` entries are
/// meaningful; the rest stay zero.
using Vec = std::array<double, 2>;

inline Vec operator+(const Vec &a, const Vec &b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec operator-(const Vec &a, const Vec &b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec operator*(double s, const Vec &a) { return {s * a[0], s * a[1]}; }
inline Vec operator-(const Vec &a) { return {-a[0], -a[1]}; }

inline double dot(const Vec &a, const Vec &b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec &a) { return std::sqrt(dot(a, a)); }

/// Wrap a coordinate into [0, 1).
inline double wrap_unit(double x) {
    double w = x - std::floor(x);
    return w >= 1.0 ? 0.0 : w;
}

inline Vec wrap_unit(const Vec &x) { return {wrap_unit(x[0]), wrap_unit(x[1])}; }

/// Signed shortest displacement on the unit circle, in [-1/2, 1/2).
inline double periodic_delta(double a, double b) {
    double d = a - b;
    return d - std::floor(d + 0.5);
}

inline double torus_distance(const Vec &a, const Vec &b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = periodic_delta(a[k], b[k]);
        s += d * d;
    }
    return std::sqrt(s);
}

/// 2x2 matrix, row-major; 1D problems use entry (0,0) only.
using Mat2 = std::array<std::array<double, 2>, 2>;

} // namespace dhj
