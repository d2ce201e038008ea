#include "doctest.h"

#include <cmath>
#include <numbers>

#include "dhj/aubry.hpp"
#include "dhj/error.hpp"

using namespace dhj;

namespace {
constexpr double kPi = std::numbers::pi;

Trajectory straight_curve(double x0, double v, double a, double b, int steps) {
    Trajectory c;
    c.dim = 1;
    c.kind = TrajectoryKind::Tangent;
    for (int i = 0; i <= steps; ++i) {
        double t = a + (b - a) * i / steps;
        c.times.push_back(t);
        c.positions.push_back({x0 + v * (t - a), 0.0});
        c.second.push_back({v, 0.0});
    }
    return c;
}

const GridFunction &cosine_solution() {
    static const GridFunction u = [] {
        auto m = MechanicalPreset::cosine(1.0, 1).model(0.5);
        SemigroupConfig cfg;
        cfg.dt = 4e-3;
        return solve_stationary(GridFunction::constant(PeriodicGrid(1, 128), 0.0), cfg, m, 1e-7, 200000).u;
    }();
    return u;
}
} // namespace

TEST_CASE("calibration defect of a straight curve against closed form") {
    const double lam = 0.8, v = 0.6;
    auto m = MechanicalPreset::free(1).model(lam);
    auto zero = GridFunction::constant(PeriodicGrid(1, 64), 0.0);
    auto c = straight_curve(0.1, v, -1.0, 0.0, 2000);
    // int_a^b e^{lam t} v^2/2 dt
    double exact = v * v / 2 * (1.0 - std::exp(-lam)) / lam;
    CHECK(calibration_defect(zero, c, -1.0, 0.0, m) == doctest::Approx(exact).epsilon(1e-6));
    CHECK(calibration_defect(zero, c, -0.5, -0.5, m) == 0.0);
    CHECK_THROWS_AS(calibration_defect(zero, c, 0.0, -1.0, m), InvalidArgument);
    CHECK_THROWS_AS(calibration_defect(zero, c, -3.0, 0.0, m), InvalidArgument);

    // constant potential, u = -c/lam: resting curves are calibrated
    auto cm = MechanicalPreset::constant(1.0, 1).model(lam);
    auto rest = straight_curve(0.4, 0.0, -1.0, 0.0, 1000);
    CHECK(std::abs(calibration_defect(GridFunction::constant(PeriodicGrid(1, 64), -1.0 / lam), rest, -1.0, 0.0, cm)) < 1e-6);
}

TEST_CASE("backward curves of a flat solution rest") {
    auto cm = MechanicalPreset::constant(1.0, 1).model(0.5);
    auto u = GridFunction::constant(PeriodicGrid(1, 64), -2.0);
    auto c = backward_calibrated_curve(u, {0.3, 0.0}, 1.0, 1e-2, cm);
    REQUIRE(c.size() == 101);
    CHECK(c.times.front() == doctest::Approx(-1.0));
    CHECK(c.times.back() == 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.positions[i][0] == doctest::Approx(0.3));
}

TEST_CASE("backward curves of the cosine solution are calibrated and flow to the saddle") {
    const auto &u = cosine_solution();
    auto m = MechanicalPreset::cosine(1.0, 1).model(0.5);
    auto c = backward_calibrated_curve(u, {0.3, 0.0}, 2.0, 1e-3, m);
    CHECK(std::abs(calibration_defect(u, c, -2.0, 0.0, m)) < 2e-3);
    // going back in time the curve approaches the maximum of V at 0
    CHECK(std::abs(c.positions.front()[0]) < 0.05);
    // velocity is H_p(x, Du) = Du
    CHECK(c.second.back()[0] == doctest::Approx(interpolate_gradient(u, {0.3, 0.0})[0]));
}

TEST_CASE("Aubry candidates of the cosine preset sit at the maximum of V") {
    const auto &u = cosine_solution();
    auto m = MechanicalPreset::cosine(1.0, 1).model(0.5);
    auto pts = aubry_candidates(u, m);
    REQUIRE_FALSE(pts.empty());
    for (const auto &p : pts) CHECK(torus_distance(p.x, {0.0, 0.0}, 1) <= 2.0 / 128);
    auto reps = cluster_candidates(pts, u.grid());
    CHECK(reps.size() == 1);
    CHECK(to_json(reps, 1).find("\"residual\"") != std::string::npos);

    // Dirac residuals: zero at the Aubry point, positive at the sink
    CHECK(std::abs(constrained_residual(u, DiscreteMeasure::dirac({0.0, 0.0}), m)) < 2e-3);
    double sink = constrained_residual(u, DiscreteMeasure::dirac({0.5, 0.0}), m);
    // L(1/2, 0) - lam u(1/2) = 1 - lam u(1/2)
    CHECK(sink == doctest::Approx(1.0 - 0.5 * interpolate(u, {0.5, 0.0})));
    CHECK(sink > 0.1);
}

TEST_CASE("empty Aubry set is reported") {
    auto m = MechanicalPreset::free(1).model(1.0);
    auto u = GridFunction::sample(PeriodicGrid(1, 64), [](const Vec &x) { return std::sin(2 * kPi * x[0]); });
    CHECK_THROWS_AS(aubry_candidates(u, m), EmptyAubry);
}

TEST_CASE("clusters link across the periodic seam") {
    PeriodicGrid g(1, 100);
    std::vector<AubryPoint> pts{{{0.0, 0.0}, 0, 3e-4},
                                {{0.99, 0.0}, 99, -1e-4},
                                {{0.5, 0.0}, 50, 2e-4},
                                {{0.51, 0.0}, 51, 5e-4}};
    auto reps = cluster_candidates(pts, g);
    REQUIRE(reps.size() == 2);
    CHECK(reps[0].node == 99);
    CHECK(reps[1].node == 50);
}

TEST_CASE("measure residual is a weighted sum") {
    auto m = MechanicalPreset::cosine(1.0, 1).model(0.5);
    auto u = GridFunction::constant(PeriodicGrid(1, 32), -1.0);
    auto mu = DiscreteMeasure::uniform({{0.0, 0.0}, {0.5, 0.0}}, {{1.0, 0.0}, {0.0, 0.0}});
    // ((1/2 - 1 + 1/2) + (0 + 1 + 1/2)) / 2
    CHECK(constrained_residual(u, mu, m) == doctest::Approx(0.75));
}

TEST_CASE("bump potential profile") {
    BumpPotential b;
    b.anchors = {{0.0, 0.0}};
    b.height = 0.02;
    b.radius = 0.1;
    b.neighborhood = 0.05;
    CHECK(b.value({0.03, 0.0}) == 0.0);
    CHECK(b.value({0.97, 0.0}) == 0.0);
    CHECK(b.value({0.3, 0.0}) == doctest::Approx(0.02));
    CHECK(b.value({0.1, 0.0}) == doctest::Approx(0.02 * 0.25)); // smoothstep(1/2)^2
    for (double x : {0.07, 0.1, 0.13, 0.9}) {
        double fd = (b.value({x + 1e-7, 0.0}) - b.value({x - 1e-7, 0.0})) / 2e-7;
        CHECK(b.gradient({x, 0.0})[0] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
    }
}

TEST_CASE("perturbed subsolution is strict away from the Aubry set") {
    auto m = MechanicalPreset::cosine(1.0, 1).model(0.5);
    PeriodicGrid g(1, 64);
    SemigroupConfig cfg;
    cfg.dt = 1e-2;
    auto u = solve_stationary(GridFunction::constant(g, 0.0), cfg, m, 1e-7, 100000).u;
    BumpPotential b;
    b.anchors = {{0.0, 0.0}};
    b.height = 1e-2;
    b.radius = 0.1;
    b.neighborhood = 0.05;
    auto p = perturbation_subsolution(m, g, b, cfg, 1e-7, 100000);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(p.u[k] <= u[k] + 5e-3);
        if (b.distance(g.node(k)) > b.neighborhood) CHECK(p.strictness[k] <= -0.5 * p.bump[k] + 2e-3);
    }
    // dense anchors take the indexed path; all nodes inside the neighbourhood leave u unchanged
    BumpPotential dense = b;
    dense.anchors.clear();
    for (std::size_t k = 0; k < g.size(); ++k) dense.anchors.push_back(g.node(k));
    auto q = perturbation_subsolution(m, g, dense, cfg, 1e-7, 100000);
    CHECK(sup_distance(q.u, u) < 1e-12);
}
