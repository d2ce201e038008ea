#pragma once

#include <string>
#include <vector>

#include "dhj/error.hpp"
#include "dhj/grid.hpp"
#include "dhj/model.hpp"
#include "dhj/trajectory.hpp"

namespace dhj {

enum class Direction { Backward, Forward };

/// Discretization of the discounted Lax-Oleinik operators.
struct SemigroupConfig {
    double dt = 1e-3;
    int v_grid = 33;          // coarse velocity samples per axis over [-v_bound, v_bound]; odd
    double refine_tol = 1e-8; // golden-section bracket width
    Interp scheme = Interp::Cubic;
    int sweeps_2d = 2;        // per-axis refinement sweeps on T^2

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history; // sup |u_{k+1} - u_k|
    bool converged = false;
    double wall_time = 0.0; // seconds

    /// JSON text; wall time is omitted unless requested so artifacts stay reproducible.
    std::string to_json(bool include_timing = false) const;
};

class NotConverged : public Error {
  public:
    explicit NotConverged(SolveReport report);
    const SolveReport &report() const noexcept { return report_; }

  private:
    SolveReport report_;
};

/// One step of the discrete backward operator:
///   min_v e^{-lambda dt} psi(x - dt v) + dt e^{-lambda dt/2} L(x - dt v/2, v).
GridFunction backward_step(const GridFunction &psi, const SemigroupConfig &cfg, const Model &model);

/// One step of the discrete forward operator:
///   max_v e^{lambda dt} psi(x + dt v) - dt e^{lambda dt/2} L(x + dt v/2, v).
GridFunction forward_step(const GridFunction &psi, const SemigroupConfig &cfg, const Model &model);

/// round(t_total / dt)-fold composition of the one-step operator.
GridFunction evolve(const GridFunction &psi, double t_total, const SemigroupConfig &cfg, const Model &model,
                    Direction direction);

struct StationarySolution {
    GridFunction u;
    SolveReport report;
};

/// Value iteration of `backward_step` until sup|u_{k+1} - u_k| <= tol (1 - e^{-lambda dt}).
/// Throws NotConverged (with the report) after max_iters.
StationarySolution solve_stationary(const GridFunction &psi0, const SemigroupConfig &cfg, const Model &model,
                                    double tol, int max_iters);

/// Acceptance thresholds for the C^{1,1} check of a regularized field.
struct RegularityPolicy {
    double max_constant = 60.0;
    double max_variation = 0.25;
    double variation_floor = 1.0; // constants below this count as flat
    std::vector<int> scales{1, 2, 4, 8};
    bool enforce = true; // throw RegularityFailure when violated
};

struct Regularization {
    GridFunction w;
    SecondDifferenceConstants constants;
    double concave_variation = 0.0;
    double convex_variation = 0.0;
    double max_excess = 0.0; // max(w - u_minus) over nodes
    bool regular = false;
};

/// w = T_s^- T_t^+ u_minus (forward for time t, then backward for time s).
Regularization regularize(const GridFunction &u_minus, double t, double s, const SemigroupConfig &cfg,
                          const Model &model, const RegularityPolicy &policy = {});

/// Node-wise lambda u(x) + H(x, Du(x)) with central differences.
GridFunction residual_field(const GridFunction &u, const Model &model);

struct DominationViolation {
    std::size_t curve = 0;
    double a = 0.0;
    double b = 0.0;
    double lhs = 0.0; // e^{lambda b} u(gamma(b)) - e^{lambda a} u(gamma(a))
    double rhs = 0.0; // discounted action over [a, b]
};

/// Checks the discounted domination inequality on every pair of sampled times
/// (at most `max_points` per curve, evenly strided) with trapezoid quadrature.
std::vector<DominationViolation> domination_check(const GridFunction &u, const std::vector<Trajectory> &curves,
                                                  const Model &model, double tol_dom, int max_points = 64);

} // namespace dhj
