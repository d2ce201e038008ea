#pragma once

#include <string>
#include <vector>

#include "dhj/grid.hpp"
#include "dhj/model.hpp"
#include "dhj/semigroup.hpp"
#include "dhj/trajectory.hpp"

namespace dhj {

/// Backward characteristic of u through x: gamma' = H_p(gamma, Du(gamma)) on
/// [-T, 0] with gamma(0) = x, RK4 on the gradient of the cubic interpolant.
/// Samples are (x, v) with increasing times -T..0.
/// Throws GradientBlowup when |Du| exceeds 10 p_bound along the way.
Trajectory backward_calibrated_curve(const GridFunction &u, const Vec &x, double T, double dt_curve,
                                     const Model &model);

/// int_a^b e^{lambda t} L(gamma, gamma') dt - [e^{lambda b} u(gamma(b)) - e^{lambda a} u(gamma(a))]
/// with trapezoid quadrature on the curve's samples (a, b snap to the nearest sample).
double calibration_defect(const GridFunction &u, const Trajectory &curve, double a, double b, const Model &model);

struct AubryPoint {
    Vec x{};
    std::size_t node = 0;
    double residual = 0.0;
};

struct AubryOptions {
    double eps_res = 1e-3;
    double T_recur = 2.0;
    double dt_curve = 1e-3;
};

/// Nodes whose residual is within eps_res and whose backward curve stays
/// within eps_res of its endpoint over [-T_recur, 0]. Throws EmptyAubry.
std::vector<AubryPoint> aubry_candidates(const GridFunction &u_minus, const Model &model,
                                         const AubryOptions &opts = {});

/// Groups of candidates connected through neighbouring nodes (torus distance
/// at most `link` grid spacings); returns one representative node per group,
/// the one with the smallest |residual|.
std::vector<AubryPoint> cluster_candidates(const std::vector<AubryPoint> &pts, const PeriodicGrid &grid,
                                           double link = 1.5);

std::string to_json(const std::vector<AubryPoint> &pts, int dim);

/// sum_i w_i (L(x_i, v_i) - lambda u(x_i)).
double constrained_residual(const GridFunction &u, const DiscreteMeasure &mu, const Model &model);

/// Bump vanishing within `neighborhood` of the anchor points:
/// V(x) = height * S((d - neighborhood) / radius)^2 with S the smoothstep,
/// clamped to [0, 1], d the torus distance to the nearest anchor.
struct BumpPotential {
    std::vector<Vec> anchors;
    int dim = 1;
    double height = 1e-2;
    double radius = 0.1;
    double neighborhood = 0.0;

    double distance(const Vec &x) const;
    double value(const Vec &x) const;
    Vec gradient(const Vec &x) const;
    /// Profile as a function of the distance d to the nearest anchor.
    double value_at(double d) const;
    Vec gradient_from(const Vec &x, const Vec &anchor, double d) const;
};

struct PerturbedSubsolution {
    GridFunction u;          // solution of the perturbed stationary problem
    GridFunction strictness; // lambda u + H(x, Du) with the unperturbed H
    GridFunction bump;       // V_bump sampled on the grid
    SolveReport report;
};

/// Solves the stationary problem for H + V_bump and evaluates the strictness
/// field against the original H.
PerturbedSubsolution perturbation_subsolution(const Model &model, const PeriodicGrid &grid,
                                              const BumpPotential &bump, const SemigroupConfig &cfg,
                                              double tol, int max_iters);

} // namespace dhj
