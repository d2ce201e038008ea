#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "dhj/error.hpp"
#include "dhj/grid.hpp"

using namespace dhj;

namespace {
constexpr double kPi = std::numbers::pi;

double midpoint_error(int n, Interp scheme) {
    PeriodicGrid g(1, n);
    auto f = GridFunction::sample(g, [](const Vec &x) { return std::sin(2 * kPi * x[0]); });
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = (i + 0.5) / n;
        err = std::max(err, std::abs(interpolate(f, {x, 0.0}, scheme) - std::sin(2 * kPi * x)));
    }
    return err;
}
} // namespace

TEST_CASE("grid indexing wraps on the torus") {
    PeriodicGrid g(2, 8);
    CHECK(g.size() == 64);
    CHECK(g.index(-1, 0) == g.index(7, 0));
    CHECK(g.index(3, 9) == g.index(3, 1));
    auto ij = g.multi_index(g.index(5, 6));
    CHECK(ij[0] == 5);
    CHECK(ij[1] == 6);
    CHECK(g.node(g.index(2, 4))[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(PeriodicGrid(3, 8), InvalidArgument);
    CHECK_THROWS_AS(PeriodicGrid(1, 1), InvalidArgument);
}

TEST_CASE("interpolation is exact on nodes and periodic") {
    PeriodicGrid g(2, 16);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(g.size());
    for (auto &x : v) x = u(rng);
    GridFunction f(g, v);
    for (auto s : {Interp::Linear, Interp::Cubic, Interp::ClampedCubic}) {
        for (std::size_t k = 0; k < g.size(); k += 7) CHECK(interpolate(f, g.node(k), s) == doctest::Approx(v[k]));
        Vec x{0.3141, 0.777};
        CHECK(interpolate(f, x, s) == doctest::Approx(interpolate(f, {x[0] + 2.0, x[1] - 3.0}, s)));
    }
}

TEST_CASE("interpolation convergence orders") {
    double l1 = midpoint_error(32, Interp::Linear), l2 = midpoint_error(64, Interp::Linear);
    double c1 = midpoint_error(32, Interp::Cubic), c2 = midpoint_error(64, Interp::Cubic);
    CHECK(l1 / l2 == doctest::Approx(4.0).epsilon(0.05));
    CHECK(std::log2(c1 / c2) > 2.8);
    CHECK(c2 < l2);
}

TEST_CASE("linear interpolation matches hand computation") {
    PeriodicGrid g(1, 8);
    GridFunction f(g, {0.0, 1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0});
    CHECK(interpolate(f, {0.0625, 0.0}, Interp::Linear) == doctest::Approx(0.5));
    CHECK(interpolate(f, {0.9375, 0.0}, Interp::Linear) == doctest::Approx(24.5)); // between 49 and 0
    // Catmull-Rom weights at the midpoint: (-1, 9, 9, -1) / 16
    CHECK(interpolate(f, {0.1875, 0.0}, Interp::Cubic) == doctest::Approx((-0.0 + 9 * 1.0 + 9 * 4.0 - 9.0) / 16.0));
    CHECK(interpolate(f, {0.0625, 0.0}, Interp::Cubic) == doctest::Approx((-49.0 + 0.0 + 9 * 1.0 - 4.0) / 16.0));
}

TEST_CASE("clamped cubic never leaves the cell range") {
    PeriodicGrid g(1, 16);
    auto f = GridFunction::sample(g, [](const Vec &x) { return x[0] < 0.5 ? 0.0 : 1.0; });
    for (int i = 0; i < 1000; ++i) {
        double x = i / 1000.0;
        int c = int(std::floor(x * 16));
        double a = f[g.index(c)], b = f[g.index(c + 1)];
        double y = interpolate(f, {x, 0.0}, Interp::ClampedCubic);
        CHECK(y >= std::min(a, b) - 1e-15);
        CHECK(y <= std::max(a, b) + 1e-15);
    }
    // plain Catmull-Rom dips below zero one cell before the jump: 0.5 (t^3 - t^2) at t = 1/2
    CHECK(interpolate(f, {6.5 / 16, 0.0}, Interp::Cubic) == doctest::Approx(-0.0625));
}

TEST_CASE("gradients") {
    PeriodicGrid g(2, 64);
    auto f = GridFunction::sample(g, [](const Vec &x) { return std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[1]); });
    auto k = g.index(5, 11);
    auto x = g.node(k);
    auto d = gradient(f, k);
    double gx = 2 * kPi * std::cos(2 * kPi * x[0]) * std::cos(2 * kPi * x[1]);
    double gy = -2 * kPi * std::sin(2 * kPi * x[0]) * std::sin(2 * kPi * x[1]);
    CHECK(d[0] == doctest::Approx(gx).epsilon(5e-3));
    CHECK(d[1] == doctest::Approx(gy).epsilon(5e-3));
    Vec y{0.123, 0.456};
    auto gi = interpolate_gradient(f, y, Interp::Cubic);
    CHECK(gi[0] == doctest::Approx(2 * kPi * std::cos(2 * kPi * y[0]) * std::cos(2 * kPi * y[1])).epsilon(1e-2));
    // linear interpolant: slope of the cell
    PeriodicGrid g1(1, 8);
    GridFunction h(g1, {0.0, 1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0});
    CHECK(interpolate_gradient(h, {0.3, 0.0}, Interp::Linear)[0] == doctest::Approx(40.0));
}

TEST_CASE("second-difference constants") {
    const int n = 128;
    PeriodicGrid g(1, n);
    auto f = GridFunction::sample(g, [](const Vec &x) { return std::cos(2 * kPi * x[0]); });
    auto c = second_difference_constants(f, {1, 2, 4, 8});
    for (std::size_t s = 0; s < c.scales.size(); ++s) {
        double hk = c.scales[s] / double(n);
        // max over nodes of cos(2 pi x) * (2 cos(2 pi hk) - 2) / hk^2 is attained at x = 1/2
        double expect = (2.0 - 2.0 * std::cos(2 * kPi * hk)) / (hk * hk);
        CHECK(c.concave_per_scale[s] == doctest::Approx(expect).epsilon(1e-9));
        CHECK(c.convex_per_scale[s] == doctest::Approx(expect).epsilon(1e-9));
    }
    // a concave crease, as in min of smooth functions: the convex-side constant blows up like 1/h
    // -|sin(pi x)| creases at 0 and is smooth elsewhere with second derivative pi^2 sin(pi x)
    auto v = GridFunction::sample(g, [](const Vec &x) { return -std::abs(std::sin(kPi * x[0])); });
    auto cv = second_difference_constants(v, {1, 8});
    CHECK(cv.concave == doctest::Approx(kPi * kPi).epsilon(1e-2));
    for (std::size_t s = 0; s < 2; ++s) {
        double hk = cv.scales[s] / double(n);
        CHECK(cv.convex_per_scale[s] == doctest::Approx(2.0 * std::sin(kPi * hk) / (hk * hk)).epsilon(1e-9));
    }
    CHECK(cv.convex_per_scale[0] / cv.convex_per_scale[1] > 8.0);
}

TEST_CASE("scale variation") {
    CHECK(scale_variation({2.0, 2.0, 2.0}) == 0.0);
    CHECK(scale_variation({1.0, 2.0, 4.0}) == doctest::Approx(0.75));
    CHECK(scale_variation({1e-9, 3e-8}) == doctest::Approx(29.0 / 30.0));
    CHECK(scale_variation({1e-9, 3e-8}, 1.0) < 1e-7);
}

TEST_CASE("CSV round trip is bit exact") {
    PeriodicGrid g(2, 16);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    std::vector<double> v(g.size());
    for (auto &x : v) x = nd(rng) * 1e-3 + 1.0 / 3.0;
    GridFunction f(g, v, "field");
    auto text = to_csv(f);
    auto back = from_csv(text);
    REQUIRE(back.grid() == g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back[k] == v[k]);
    CHECK(to_csv(back) == text);
    CHECK(text.rfind("# ", 0) == 0);
    CHECK_THROWS(from_csv("garbage"));
}

TEST_CASE("sup distance") {
    PeriodicGrid g(1, 8);
    auto a = GridFunction::constant(g, 1.0), b = GridFunction::constant(g, -0.5);
    CHECK(sup_distance(a, b) == 1.5);
    CHECK_THROWS_AS(sup_distance(a, GridFunction::constant(PeriodicGrid(1, 16), 0.0)), GridMismatch);
    CHECK(a.sup_norm() == 1.0);
    CHECK(b.min() == -0.5);
}
