#pragma once

#include <string>
#include <vector>

#include "dhj/vec.hpp"

namespace dhj {

class DiscountedHamiltonian;

enum class TrajectoryKind {
    Phase,   // samples are (x, p)
    Tangent, // samples are (x, v)
};

/// Time-stamped samples of a curve with uniform spacing. Positions are stored
/// on the universal cover (unwrapped).
struct Trajectory {
    int dim = 1;
    TrajectoryKind kind = TrajectoryKind::Phase;
    std::vector<double> times;
    std::vector<Vec> positions;
    std::vector<Vec> second; // p or v, see `kind`
    /// Optional row-major (2 dim) x (2 dim) variational matrices per sample.
    std::vector<std::vector<double>> jacobians;

    std::size_t size() const noexcept { return times.size(); }
    double dt() const noexcept { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    /// Velocity at sample i; converts momenta through H_p for phase curves.
    Vec velocity(std::size_t i, const DiscountedHamiltonian &h) const;
    /// Nearest sample index to time t (clamped).
    std::size_t index_at(double t) const;
    double jacobian_determinant(std::size_t i) const;
};

/// `t,x[,y],p|v...` rows at 17 significant digits.
std::string to_csv(const Trajectory &traj);

/// Weighted atoms (x, v) approximating an invariant measure of the
/// Euler-Lagrange flow.
class DiscreteMeasure {
  public:
    DiscreteMeasure(std::vector<Vec> positions, std::vector<Vec> velocities, std::vector<double> weights);

    static DiscreteMeasure dirac(const Vec &x, const Vec &v = {});
    /// Uniform weights on the samples of a curve (e.g. one period of a closed orbit).
    static DiscreteMeasure uniform(std::vector<Vec> positions, std::vector<Vec> velocities);

    std::size_t size() const noexcept { return weights_.size(); }
    const std::vector<Vec> &positions() const noexcept { return positions_; }
    const std::vector<Vec> &velocities() const noexcept { return velocities_; }
    const std::vector<double> &weights() const noexcept { return weights_; }

  private:
    std::vector<Vec> positions_;
    std::vector<Vec> velocities_;
    std::vector<double> weights_;
};

} // namespace dhj
