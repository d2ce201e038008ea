#include "dhj/semigroup.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "dhj/detail/minimize.hpp"

namespace dhj {

void SemigroupConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("semigroup dt must be positive");
    if (v_grid < 3 || v_grid % 2 == 0) throw InvalidArgument("v_grid must be odd and >= 3");
    if (!(refine_tol > 0.0)) throw InvalidArgument("refine_tol must be positive");
    if (sweeps_2d < 1) throw InvalidArgument("sweeps_2d must be >= 1");
}

std::string SolveReport::to_json(bool include_timing) const {
    nlohmann::ordered_json j;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["residual_history"] = residual_history;
    if (include_timing) j["wall_time"] = wall_time;
    return j.dump(2);
}

NotConverged::NotConverged(SolveReport report)
    : Error(ErrorCode::NotConverged,
            "stationary solve did not converge in " + std::to_string(report.iterations) + " iterations"),
      report_(std::move(report)) {}

namespace {

/// Minimizes `obj` over the per-axis velocity box: coarse grid, then golden
/// section around the best sample. Fixed iteration counts keep the result
/// independent of evaluation order.
template <class Objective>
detail::ScalarMin minimize_velocity(const Objective &obj, int dim, double vb, const SemigroupConfig &cfg,
                                    Vec &arg, bool &on_boundary) {
    const int m = cfg.v_grid;
    const double spacing = 2.0 * vb / (m - 1);
    double best = std::numeric_limits<double>::infinity();
    std::array<int, 2> best_idx{0, 0};
    Vec best_v{};
    const int m2 = dim == 2 ? m : 1;
    for (int j = 0; j < m2; ++j) {
        for (int i = 0; i < m; ++i) {
            Vec v{-vb + i * spacing, dim == 2 ? -vb + j * spacing : 0.0};
            double f = obj(v);
            if (f < best) {
                best = f;
                best_v = v;
                best_idx = {i, j};
            }
        }
    }

    const int sweeps = dim == 2 ? cfg.sweeps_2d : 1;
    const int iters = detail::golden_iterations(2.0 * spacing, cfg.refine_tol);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int k = 0; k < dim; ++k) {
            double lo = std::max(-vb, best_v[k] - spacing);
            double hi = std::min(vb, best_v[k] + spacing);
            Vec base = best_v;
            auto line = [&](double t) {
                Vec v = base;
                v[k] = t;
                return obj(v);
            };
            auto r = detail::golden_minimize(line, lo, hi, iters, best_v[k], best);
            best_v[k] = r.arg;
            best = r.value;
        }
    }

    on_boundary = false;
    for (int k = 0; k < dim; ++k) {
        bool edge_sample = best_idx[k] == 0 || best_idx[k] == m - 1;
        if (edge_sample && vb - std::abs(best_v[k]) <= 10.0 * cfg.refine_tol) on_boundary = true;
    }
    arg = best_v;
    return {0.0, best};
}

GridFunction step(const GridFunction &psi, const SemigroupConfig &cfg, const Model &model, Direction dir) {
    cfg.validate();
    const auto &grid = psi.grid();
    if (grid.dim() != model.dim()) throw InvalidArgument("grid and model dimensions differ");
    const int dim = grid.dim();
    const double lambda = model.lambda();
    const double dt = cfg.dt;
    const double vb = model.v_bound();
    const auto &lag = model.lagrangian;
    const bool backward = dir == Direction::Backward;
    // Backward: min  a psi(x - dt v) + dt b L(x - dt v/2, v), a = e^{-l dt}, b = e^{-l dt/2}
    // Forward:  max  a psi(x + dt v) - dt b L(x + dt v/2, v), a = e^{ l dt}, b = e^{ l dt/2}
    const double sgn = backward ? -1.0 : 1.0;
    const double a = std::exp(sgn * lambda * dt);
    const double b = std::exp(sgn * lambda * dt / 2.0);
    const double psi_sign = backward ? 1.0 : -1.0;

    std::vector<double> out(grid.size());
    for (std::size_t node = 0; node < grid.size(); ++node) {
        const Vec x = grid.node(node);
        auto objective = [&](const Vec &v) {
            Vec y = x + (sgn * dt) * v;
            Vec mid = x + (sgn * dt * 0.5) * v;
            return psi_sign * a * interpolate(psi, y, cfg.scheme) + dt * b * lag(mid, v);
        };
        Vec arg{};
        bool on_boundary = false;
        auto r = minimize_velocity(objective, dim, vb, cfg, arg, on_boundary);
        if (on_boundary) {
            std::ostringstream os;
            os << "optimal velocity reaches the box |v| <= " << vb << " at node " << node;
            if (backward) throw UnboundedBelow(os.str());
            throw UnboundedAbove(os.str());
        }
        out[node] = backward ? r.value : -r.value;
    }
    return GridFunction(grid, std::move(out), psi.name());
}

} // namespace

GridFunction backward_step(const GridFunction &psi, const SemigroupConfig &cfg, const Model &model) {
    return step(psi, cfg, model, Direction::Backward);
}

GridFunction forward_step(const GridFunction &psi, const SemigroupConfig &cfg, const Model &model) {
    return step(psi, cfg, model, Direction::Forward);
}

GridFunction evolve(const GridFunction &psi, double t_total, const SemigroupConfig &cfg, const Model &model,
                    Direction direction) {
    cfg.validate();
    if (t_total < 0.0) throw InvalidArgument("evolution time must be nonnegative");
    const long m = std::lround(t_total / cfg.dt);
    GridFunction u = psi;
    for (long k = 0; k < m; ++k) u = step(u, cfg, model, direction);
    return u;
}

StationarySolution solve_stationary(const GridFunction &psi0, const SemigroupConfig &cfg, const Model &model,
                                    double tol, int max_iters) {
    cfg.validate();
    if (!(tol > 0.0)) throw InvalidArgument("stationary tolerance must be positive");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const double threshold = tol * (1.0 - std::exp(-model.lambda() * cfg.dt));

    SolveReport report;
    GridFunction u = psi0;
    for (int k = 0; k < max_iters; ++k) {
        GridFunction next = backward_step(u, cfg, model);
        double diff = sup_distance(next, u);
        report.residual_history.push_back(diff);
        report.iterations = k + 1;
        u = std::move(next);
        if (diff <= threshold) {
            report.converged = true;
            break;
        }
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!report.converged) throw NotConverged(std::move(report));
    return {u.renamed("u_minus"), std::move(report)};
}

Regularization regularize(const GridFunction &u_minus, double t, double s, const SemigroupConfig &cfg,
                          const Model &model, const RegularityPolicy &policy) {
    if (!(s > 0.0) || !(t >= s) || !(t <= 0.5))
        throw InvalidArgument("regularize needs 0 < s <= t <= 0.5");
    GridFunction forward = evolve(u_minus, t, cfg, model, Direction::Forward);
    GridFunction w = evolve(forward, s, cfg, model, Direction::Backward).renamed("u_reg");

    Regularization out{w, second_difference_constants(w, policy.scales), 0.0, 0.0, 0.0, false};
    out.concave_variation = scale_variation(out.constants.concave_per_scale, policy.variation_floor);
    out.convex_variation = scale_variation(out.constants.convex_per_scale, policy.variation_floor);
    out.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.size(); ++i) out.max_excess = std::max(out.max_excess, w[i] - u_minus[i]);
    out.regular = out.constants.concave <= policy.max_constant && out.constants.convex <= policy.max_constant &&
                  out.concave_variation <= policy.max_variation && out.convex_variation <= policy.max_variation;
    if (policy.enforce && !out.regular) {
        std::ostringstream os;
        os << "regularized field is not C^{1,1} at grid level: C_concave = " << out.constants.concave
           << " (variation " << out.concave_variation << "), C_convex = " << out.constants.convex
           << " (variation " << out.convex_variation << ")";
        throw RegularityFailure(os.str());
    }
    return out;
}

GridFunction residual_field(const GridFunction &u, const Model &model) {
    const auto &grid = u.grid();
    std::vector<double> r(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        r[k] = model.lambda() * u[k] + model.hamiltonian(grid.node(k), gradient(u, k));
    return GridFunction(grid, std::move(r), "residual");
}

std::vector<DominationViolation> domination_check(const GridFunction &u, const std::vector<Trajectory> &curves,
                                                  const Model &model, double tol_dom, int max_points) {
    if (max_points < 2) throw InvalidArgument("domination_check needs max_points >= 2");
    const double lambda = model.lambda();
    std::vector<DominationViolation> out;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto &curve = curves[c];
        const std::size_t n = curve.size();
        if (n < 2) continue;
        std::vector<double> action(n, 0.0), integrand(n), weighted_u(n);
        for (std::size_t i = 0; i < n; ++i) {
            double t = curve.times[i];
            integrand[i] = std::exp(lambda * t) *
                           model.lagrangian(curve.positions[i], curve.velocity(i, model.hamiltonian));
            weighted_u[i] = std::exp(lambda * t) * interpolate(u, curve.positions[i]);
        }
        for (std::size_t i = 1; i < n; ++i)
            action[i] = action[i - 1] + 0.5 * (curve.times[i] - curve.times[i - 1]) * (integrand[i] + integrand[i - 1]);

        std::size_t stride = std::max<std::size_t>(1, (n - 1) / std::size_t(max_points - 1));
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
        if (idx.back() != n - 1) idx.push_back(n - 1);
        for (std::size_t p = 0; p < idx.size(); ++p) {
            for (std::size_t q = p + 1; q < idx.size(); ++q) {
                std::size_t ia = idx[p], ib = idx[q];
                double lhs = weighted_u[ib] - weighted_u[ia];
                double rhs = action[ib] - action[ia];
                if (lhs - rhs > tol_dom) out.push_back({c, curve.times[ia], curve.times[ib], lhs, rhs});
            }
        }
    }
    return out;
}

} // namespace dhj
