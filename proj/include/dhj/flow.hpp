#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dhj/grid.hpp"
#include "dhj/model.hpp"
#include "dhj/trajectory.hpp"

namespace dhj {

/// Finite set of phase points, all flowed for the same time.
struct PhaseCloud {
    int dim = 1;
    std::vector<PhaseState> points;
    double timestamp = 0.0;

    std::size_t size() const noexcept { return points.size(); }
};

/// `x[,y],p[,py]` rows at 17 significant digits.
std::string to_csv(const PhaseCloud &cloud);

/// Escape guard used by every flow integration: |p| <= 10 p_bound.
double escape_limit(const DiscountedHamiltonian &h);

/// RK4 integration of x' = H_p, p' = -H_x - lambda p over [0, T] with step dt.
/// With `with_jacobian` the variational equation J' = DX J, J(0) = I, is
/// integrated alongside. Positions are unwrapped.
Trajectory integrate(const DiscountedHamiltonian &h, const PhaseState &start, double T, double dt,
                     bool with_jacobian = false);

/// Flow map only (no samples kept); same scheme as `integrate`.
PhaseState flow_map(const DiscountedHamiltonian &h, const PhaseState &start, double T, double dt);

/// Row-major (2 dim)^2 Jacobian of the phase vector field.
std::vector<double> vector_field_jacobian(const DiscountedHamiltonian &h, const PhaseState &s);

struct EquilibriumInfo {
    PhaseState location;
    std::vector<std::complex<double>> eigenvalues; // sorted by (re, im)
    std::optional<double> mu_min_positive;
    std::string classification; // saddle | sink | source | center-like
};

struct EquilibriumSet {
    int dim = 1;
    bool continuum = false; // non-isolated equilibria; `points` is then empty
    std::vector<EquilibriumInfo> points;
};

/// Eigen-analysis of the linearized vector field at `location`.
EquilibriumInfo linearize(const DiscountedHamiltonian &h, const PhaseState &location);

/// Newton iteration from a seeds_per_axis^(2 dim) grid over [0,1)^dim x [-p_bound, p_bound]^dim.
EquilibriumSet equilibria_find(const DiscountedHamiltonian &h, int seeds_per_axis = 16);

std::string to_json(const EquilibriumSet &set);

/// Grid nodes x p-grid points with lambda u(x) + H(x, p) <= slack.
/// Throws EmptyRegion when nothing qualifies.
PhaseCloud sublevel_region(const GridFunction &u, const DiscountedHamiltonian &h, int p_samples,
                           double slack = 1e-5);

/// Forward image of every cloud point after time T.
PhaseCloud attractor_approximate(const PhaseCloud &cloud, const DiscountedHamiltonian &h, double T, double dt);

/// Nearest-neighbour distances in cell units: x offsets are measured on the
/// torus and divided by hx, p offsets divided by hp.
class CloudIndex {
  public:
    CloudIndex(const std::vector<PhaseState> &points, int dim, double hx, double hp);
    /// Distance (cell units) from q to the nearest indexed point, or +inf if
    /// none lies within `radius` cells.
    double nearest(const PhaseState &q, double radius) const;
    std::size_t size() const noexcept { return pts_.size(); }

  private:
    struct Key {
        std::int64_t a, b, c, d;
        bool operator<(const Key &o) const;
    };
    std::vector<double> scaled(const PhaseState &s) const;
    Key key_of(const std::vector<double> &z) const;

    int dim_;
    double hx_, hp_;
    std::int64_t wrap_cells_; // x period measured in buckets
    std::vector<PhaseState> pts_;
    std::vector<std::pair<Key, std::size_t>> buckets_; // sorted by key
};

/// max over `from` of the distance to the nearest point of `to`, in cell units.
double directed_hausdorff(const std::vector<PhaseState> &from, const CloudIndex &to);

/// Samples of both branches of a 1D saddle's unstable manifold, traced from
/// saddle +- eps * (unstable eigenvector) for time T and wrapped to [0,1).
std::vector<PhaseState> unstable_manifold(const DiscountedHamiltonian &h, const PhaseState &saddle, double eps,
                                          double T, double dt);

struct LyapunovReport {
    int trajectories = 0;
    int violations = 0;          // samples with F(t) > e^{-lambda t} F(0) + tol
    double worst_margin = 0.0;   // max of F(t) - e^{-lambda t} F(0)
    double tol = 0.0;
    bool passed() const noexcept { return violations == 0; }
};

struct LyapunovOptions {
    int n_trajectories = 100;
    double T = 5.0;
    double dt = 1e-3;
    double p_range = 2.0; // starts drawn with |p_k| <= p_range
    double tol = 1e-3;
    std::uint64_t seed = 1;
};

/// F_u(x, p) = lambda u(x) + H(x, p) along random trajectories, checked
/// against the Gronwall bound at every step.
LyapunovReport lyapunov_decay_check(const GridFunction &u, const DiscountedHamiltonian &h,
                                    const LyapunovOptions &opts = {});

} // namespace dhj
