#include "dhj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dhj/error.hpp"
#include "dhj/io.hpp"
#include "dhj/model.hpp"

namespace dhj {

Vec Trajectory::velocity(std::size_t i, const DiscountedHamiltonian &h) const {
    if (kind == TrajectoryKind::Tangent) return second[i];
    return h.dp(positions[i], second[i]);
}

std::size_t Trajectory::index_at(double t) const {
    if (times.empty()) throw InvalidArgument("empty trajectory");
    if (times.size() == 1) return 0;
    double s = (t - times.front()) / dt();
    long k = std::lround(s);
    return std::size_t(std::clamp<long>(k, 0, long(times.size()) - 1));
}

double Trajectory::jacobian_determinant(std::size_t i) const {
    if (i >= jacobians.size()) throw InvalidArgument("trajectory has no variational data");
    const auto &j = jacobians[i];
    if (dim == 1) return j[0] * j[3] - j[1] * j[2];
    // 4x4: Gaussian elimination with partial pivoting.
    double a[4][4];
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) a[r][c] = j[r * 4 + c];
    double det = 1.0;
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < 4; ++k) std::swap(a[c][k], a[piv][k]);
            det = -det;
        }
        det *= a[c][c];
        for (int r = c + 1; r < 4; ++r) {
            double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

std::string to_csv(const Trajectory &traj) {
    std::ostringstream os;
    const char *s = traj.kind == TrajectoryKind::Phase ? "p" : "v";
    if (traj.dim == 1) {
        os << "t,x," << s << "\n";
    } else {
        os << "t,x,y," << s << "x," << s << "y\n";
    }
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << format_double(traj.times[i]);
        for (int k = 0; k < traj.dim; ++k) os << ',' << format_double(traj.positions[i][k]);
        for (int k = 0; k < traj.dim; ++k) os << ',' << format_double(traj.second[i][k]);
        os << '\n';
    }
    return os.str();
}

DiscreteMeasure::DiscreteMeasure(std::vector<Vec> positions, std::vector<Vec> velocities,
                                 std::vector<double> weights)
    : positions_(std::move(positions)), velocities_(std::move(velocities)), weights_(std::move(weights)) {
    if (positions_.empty()) throw InvalidArgument("discrete measure needs at least one atom");
    if (positions_.size() != velocities_.size() || positions_.size() != weights_.size())
        throw InvalidArgument("discrete measure: atom/weight count mismatch");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0)) throw InvalidArgument("discrete measure weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("discrete measure weights must sum to 1");
}

DiscreteMeasure DiscreteMeasure::dirac(const Vec &x, const Vec &v) { return DiscreteMeasure({x}, {v}, {1.0}); }

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Vec> positions, std::vector<Vec> velocities) {
    const std::size_t n = positions.size();
    if (n == 0) throw InvalidArgument("discrete measure needs at least one atom");
    // Split 1 so the weights sum to exactly one in floating point.
    std::vector<double> w(n, 1.0 / double(n));
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < n; ++i) rest -= w[i];
    w.back() = rest;
    return DiscreteMeasure(std::move(positions), std::move(velocities), std::move(w));
}

} // namespace dhj
