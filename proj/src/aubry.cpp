#include "dhj/aubry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "dhj/error.hpp"

namespace dhj {

Trajectory backward_calibrated_curve(const GridFunction &u, const Vec &x, double T, double dt_curve,
                                     const Model &model) {
    if (!(T > 0.0)) throw InvalidArgument("calibrated curve needs T > 0");
    if (!(dt_curve > 0.0)) throw InvalidArgument("calibrated curve needs dt_curve > 0");
    if (u.grid().dim() != model.dim()) throw InvalidArgument("grid and model dimensions differ");
    const auto &h = model.hamiltonian;
    const double limit = 10.0 * model.p_bound();
    auto velocity = [&](const Vec &y) {
        Vec g = interpolate_gradient(u, y);
        if (!(norm(g) <= limit)) {
            std::ostringstream os;
            os << "interpolated gradient " << norm(g) << " exceeds " << limit << " near x = " << y[0];
            throw GradientBlowup(os.str());
        }
        return h.dp(y, g);
    };

    const long m = std::lround(T / dt_curve);
    // Integrate s = -t forward: dy/ds = -H_p(y, Du(y)).
    std::vector<Vec> ys(m + 1), vs(m + 1);
    ys[0] = x;
    vs[0] = velocity(x);
    for (long k = 0; k < m; ++k) {
        const Vec &y = ys[k];
        Vec k1 = -vs[k];
        Vec k2 = -velocity(y + (0.5 * dt_curve) * k1);
        Vec k3 = -velocity(y + (0.5 * dt_curve) * k2);
        Vec k4 = -velocity(y + dt_curve * k3);
        ys[k + 1] = y + (dt_curve / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        vs[k + 1] = velocity(ys[k + 1]);
    }

    Trajectory traj;
    traj.dim = model.dim();
    traj.kind = TrajectoryKind::Tangent;
    traj.times.resize(m + 1);
    traj.positions.resize(m + 1);
    traj.second.resize(m + 1);
    for (long i = 0; i <= m; ++i) {
        traj.times[i] = double(i - m) * dt_curve;
        traj.positions[i] = ys[m - i];
        traj.second[i] = vs[m - i];
    }
    return traj;
}

double calibration_defect(const GridFunction &u, const Trajectory &curve, double a, double b, const Model &model) {
    if (curve.size() < 2) throw InvalidArgument("calibration defect needs at least two samples");
    if (a > b) throw InvalidArgument("calibration defect needs a <= b");
    const double lo = curve.times.front() - 0.5 * curve.dt(), hi = curve.times.back() + 0.5 * curve.dt();
    if (a < lo || b > hi) throw InvalidArgument("calibration interval outside the curve's time range");
    const std::size_t ia = curve.index_at(a), ib = curve.index_at(b);
    const double lambda = model.lambda();
    auto integrand = [&](std::size_t i) {
        return std::exp(lambda * curve.times[i]) *
               model.lagrangian(curve.positions[i], curve.velocity(i, model.hamiltonian));
    };
    double action = 0.0;
    double prev = integrand(ia);
    for (std::size_t i = ia + 1; i <= ib; ++i) {
        double cur = integrand(i);
        action += 0.5 * (curve.times[i] - curve.times[i - 1]) * (prev + cur);
        prev = cur;
    }
    auto weighted = [&](std::size_t i) { return std::exp(lambda * curve.times[i]) * interpolate(u, curve.positions[i]); };
    return action - (weighted(ib) - weighted(ia));
}

std::vector<AubryPoint> aubry_candidates(const GridFunction &u_minus, const Model &model, const AubryOptions &opts) {
    if (!(opts.eps_res > 0.0)) throw InvalidArgument("eps_res must be positive");
    if (!(opts.T_recur > 0.0)) throw InvalidArgument("T_recur must be positive");
    const auto res = residual_field(u_minus, model);
    const auto &g = u_minus.grid();
    std::vector<AubryPoint> out;
    for (std::size_t node = 0; node < g.size(); ++node) {
        if (!(std::abs(res[node]) <= opts.eps_res)) continue;
        const Vec x = g.node(node);
        Trajectory curve;
        try {
            curve = backward_calibrated_curve(u_minus, x, opts.T_recur, opts.dt_curve, model);
        } catch (const GradientBlowup &) {
            continue;
        }
        const Vec end = curve.positions.front();
        double spread = 0.0;
        for (const auto &p : curve.positions) spread = std::max(spread, norm(p - end));
        if (spread <= opts.eps_res) out.push_back({x, node, res[node]});
    }
    if (out.empty()) throw EmptyAubry("no node passes the residual and recurrence filters");
    return out;
}

std::vector<AubryPoint> cluster_candidates(const std::vector<AubryPoint> &pts, const PeriodicGrid &grid,
                                           double link) {
    const std::size_t k = pts.size();
    std::vector<std::size_t> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    const double reach = link * grid.h();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (torus_distance(pts[i].x, pts[j].x, grid.dim()) <= reach) {
                std::size_t a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
    std::vector<AubryPoint> reps;
    std::vector<std::size_t> rep_of(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t r = find(i);
        if (rep_of[r] == k) {
            rep_of[r] = reps.size();
            reps.push_back(pts[i]);
        } else if (std::abs(pts[i].residual) < std::abs(reps[rep_of[r]].residual)) {
            reps[rep_of[r]] = pts[i];
        }
    }
    return reps;
}

std::string to_json(const std::vector<AubryPoint> &pts, int dim) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto &p : pts) {
        nlohmann::ordered_json item;
        item["x"] = std::vector<double>(p.x.begin(), p.x.begin() + dim);
        item["node"] = p.node;
        item["residual"] = p.residual;
        j.push_back(item);
    }
    return j.dump(2);
}

double constrained_residual(const GridFunction &u, const DiscreteMeasure &mu, const Model &model) {
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const Vec &x = mu.positions()[i];
        total += mu.weights()[i] *
                 (model.lagrangian(x, mu.velocities()[i]) - model.lambda() * interpolate(u, x));
    }
    return total;
}

// ---------------------------------------------------------------------------
// Bump perturbation

double BumpPotential::distance(const Vec &x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto &a : anchors) d = std::min(d, torus_distance(x, a, dim));
    return d;
}

double BumpPotential::value_at(double d) const {
    double tau = std::clamp((d - neighborhood) / radius, 0.0, 1.0);
    double s = tau * tau * (3.0 - 2.0 * tau);
    return height * s * s;
}

Vec BumpPotential::gradient_from(const Vec &x, const Vec &anchor, double d) const {
    double tau = (d - neighborhood) / radius;
    if (tau <= 0.0 || tau >= 1.0 || d == 0.0) return {};
    double s = tau * tau * (3.0 - 2.0 * tau);
    double ds = 6.0 * tau * (1.0 - tau);
    double dv_dd = height * 2.0 * s * ds / radius;
    Vec out{};
    for (int k = 0; k < dim; ++k) out[k] = dv_dd * periodic_delta(x[k], anchor[k]) / d;
    return out;
}

double BumpPotential::value(const Vec &x) const {
    if (anchors.empty()) return height;
    return value_at(distance(x));
}

Vec BumpPotential::gradient(const Vec &x) const {
    if (anchors.empty()) return {};
    std::size_t best = 0;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        double di = torus_distance(x, anchors[i], dim);
        if (di < d) {
            d = di;
            best = i;
        }
    }
    return gradient_from(x, anchors[best], d);
}

namespace {

// Anchors bucketed on the torus; lookups scan rings of buckets outward and
// stop once no unvisited bucket can hold a closer anchor, or past the cutoff
// where the bump is flat anyway.
class AnchorIndex {
  public:
    AnchorIndex(const BumpPotential &bump) : bump_(bump) {
        cutoff_ = bump.neighborhood + bump.radius;
        per_axis_ = std::clamp(int(std::floor(8.0 / cutoff_)), 1, 1024);
        width_ = 1.0 / per_axis_;
        const int total = bump.dim == 2 ? per_axis_ * per_axis_ : per_axis_;
        buckets_.assign(std::size_t(total), {});
        for (std::size_t i = 0; i < bump.anchors.size(); ++i) buckets_[bucket(cell(bump.anchors[i]))].push_back(i);
    }

    // Nearest anchor and its distance; +inf distance if none within the cutoff.
    std::pair<std::size_t, double> nearest(const Vec &x) const {
        std::size_t best = 0;
        double d = std::numeric_limits<double>::infinity();
        auto scan = [&](int i, int j) {
            for (auto k : buckets_[bucket({i, j})]) {
                double dk = torus_distance(x, bump_.anchors[k], bump_.dim);
                if (dk < d) {
                    d = dk;
                    best = k;
                }
            }
        };
        const auto c = cell(x);
        for (int r = 0;; ++r) {
            if (bump_.dim == 1) {
                scan(c[0] - r, 0);
                if (r > 0) scan(c[0] + r, 0);
            } else {
                for (int i = -r; i <= r; ++i)
                    for (int j = -r; j <= r; ++j)
                        if (std::max(std::abs(i), std::abs(j)) == r) scan(c[0] + i, c[1] + j);
            }
            if (d <= r * width_ || r * width_ > cutoff_ || 2 * r + 1 >= per_axis_) break;
        }
        return {best, d};
    }

  private:
    std::array<int, 2> cell(const Vec &x) const {
        std::array<int, 2> c{};
        for (int k = 0; k < bump_.dim; ++k) c[k] = int(std::floor(wrap_unit(x[k]) * per_axis_)) % per_axis_;
        return c;
    }
    std::size_t bucket(std::array<int, 2> c) const {
        auto w = [&](int i) { return ((i % per_axis_) + per_axis_) % per_axis_; };
        return std::size_t(w(c[0])) + (bump_.dim == 2 ? std::size_t(w(c[1])) * per_axis_ : 0);
    }

    const BumpPotential &bump_;
    double cutoff_ = 0.0;
    double width_ = 1.0;
    int per_axis_ = 1;
    std::vector<std::vector<std::size_t>> buckets_;
};

} // namespace

PerturbedSubsolution perturbation_subsolution(const Model &model, const PeriodicGrid &grid,
                                              const BumpPotential &bump, const SemigroupConfig &cfg,
                                              double tol, int max_iters) {
    if (!(bump.height >= 0.0)) throw InvalidArgument("bump height must be nonnegative");
    if (!(bump.radius > 0.0)) throw InvalidArgument("bump radius must be positive");
    if (!(bump.neighborhood >= 0.0)) throw InvalidArgument("bump neighborhood must be nonnegative");
    if (bump.dim != model.dim() || grid.dim() != model.dim()) throw InvalidArgument("bump, grid and model dimensions differ");
    auto shared = std::make_shared<const BumpPotential>(bump);
    auto index = std::make_shared<const AnchorIndex>(*shared);
    auto value = [shared, index](const Vec &x) {
        if (shared->anchors.empty()) return shared->height;
        return shared->value_at(index->nearest(x).second);
    };
    auto grad = [shared, index](const Vec &x) -> Vec {
        if (shared->anchors.empty()) return {};
        auto [i, d] = index->nearest(x);
        return shared->gradient_from(x, shared->anchors[i], d);
    };
    auto perturbed = with_potential(model, {value, grad, {}});
    auto sol = solve_stationary(GridFunction::constant(grid, 0.0), cfg, perturbed, tol, max_iters);
    auto u = sol.u.renamed("u_perturbed");
    auto strict = residual_field(u, model).renamed("strictness");
    auto v = GridFunction::sample(grid, [&](const Vec &x) { return bump.value(x); }, "bump");
    return {std::move(u), std::move(strict), std::move(v), std::move(sol.report)};
}

} // namespace dhj
