#include "dhj/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>
#include "json.hpp"

#include "dhj/error.hpp"
#include "dhj/io.hpp"

namespace dhj {

std::string to_csv(const PhaseCloud &cloud) {
    std::ostringstream os;
    os << (cloud.dim == 1 ? "x,p\n" : "x,y,px,py\n");
    for (const auto &s : cloud.points) {
        for (int k = 0; k < cloud.dim; ++k) os << format_double(s.x[k]) << ',';
        for (int k = 0; k < cloud.dim; ++k) os << format_double(s.p[k]) << (k + 1 < cloud.dim ? "," : "\n");
    }
    return os.str();
}

double escape_limit(const DiscountedHamiltonian &h) { return 10.0 * h.p_bound(); }

namespace {

// Packed state: x[0..d), p[0..d), then optionally J row-major (2d)^2.
using State = std::array<double, 20>;

void field(const DiscountedHamiltonian &h, int d, bool jac, const State &s, State &out) {
    Vec x{s[0], d == 2 ? s[1] : 0.0};
    Vec p{s[d], d == 2 ? s[d + 1] : 0.0};
    Vec hp = h.dp(x, p);
    Vec hx = h.dx(x, p);
    for (int k = 0; k < d; ++k) {
        out[k] = hp[k];
        out[d + k] = -hx[k] - h.lambda() * p[k];
    }
    if (!jac) return;
    const int m = 2 * d;
    auto a = vector_field_jacobian(h, {x, p});
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += a[r * m + k] * s[m + k * m + c];
            out[m + r * m + c] = acc;
        }
}

void rk4_step(const DiscountedHamiltonian &h, int d, bool jac, State &s, double dt) {
    const int len = 2 * d + (jac ? 4 * d * d : 0);
    State k1{}, k2{}, k3{}, k4{}, tmp{};
    field(h, d, jac, s, k1);
    for (int i = 0; i < len; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
    field(h, d, jac, tmp, k2);
    for (int i = 0; i < len; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
    field(h, d, jac, tmp, k3);
    for (int i = 0; i < len; ++i) tmp[i] = s[i] + dt * k3[i];
    field(h, d, jac, tmp, k4);
    for (int i = 0; i < len; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

void check_escape(const DiscountedHamiltonian &h, int d, const State &s, double t) {
    double pn = std::hypot(s[d], d == 2 ? s[d + 1] : 0.0);
    if (!(pn <= escape_limit(h))) {
        std::ostringstream os;
        os << "momentum " << pn << " exceeds the escape guard " << escape_limit(h) << " at t = " << t;
        throw Escape(os.str());
    }
}

State pack(const PhaseState &st, int d, bool jac) {
    State s{};
    for (int k = 0; k < d; ++k) {
        s[k] = st.x[k];
        s[d + k] = st.p[k];
    }
    if (jac)
        for (int i = 0; i < 2 * d; ++i) s[2 * d + i * 2 * d + i] = 1.0;
    return s;
}

PhaseState unpack(const State &s, int d) {
    PhaseState out;
    for (int k = 0; k < d; ++k) {
        out.x[k] = s[k];
        out.p[k] = s[d + k];
    }
    return out;
}

void check_step(double T, double dt) {
    if (!(dt > 0.0) || dt > 1e-2) throw InvalidArgument("flow step must satisfy 0 < dt <= 1e-2");
    if (!(T >= 0.0)) throw InvalidArgument("flow time must be nonnegative");
}

} // namespace

std::vector<double> vector_field_jacobian(const DiscountedHamiltonian &h, const PhaseState &s) {
    const int d = h.dim();
    const int m = 2 * d;
    auto hs = h.hessian(s.x, s.p);
    std::vector<double> a(m * m, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            a[i * m + j] = hs.xp[j][i];           // d(H_p_i)/dx_j
            a[i * m + d + j] = hs.pp[i][j];       // d(H_p_i)/dp_j
            a[(d + i) * m + j] = -hs.xx[i][j];    // d(-H_x_i)/dx_j
            a[(d + i) * m + d + j] = -hs.xp[i][j] - (i == j ? h.lambda() : 0.0);
        }
    return a;
}

Trajectory integrate(const DiscountedHamiltonian &h, const PhaseState &start, double T, double dt,
                     bool with_jacobian) {
    check_step(T, dt);
    const int d = h.dim();
    const long steps = std::lround(T / dt);
    Trajectory traj;
    traj.dim = d;
    traj.kind = TrajectoryKind::Phase;
    traj.times.reserve(steps + 1);
    traj.positions.reserve(steps + 1);
    traj.second.reserve(steps + 1);
    State s = pack(start, d, with_jacobian);
    const int m = 2 * d;
    auto record = [&](long i) {
        auto ps = unpack(s, d);
        traj.times.push_back(i * dt);
        traj.positions.push_back(ps.x);
        traj.second.push_back(ps.p);
        if (with_jacobian) traj.jacobians.emplace_back(s.begin() + m, s.begin() + m + m * m);
    };
    check_escape(h, d, s, 0.0);
    record(0);
    for (long i = 1; i <= steps; ++i) {
        rk4_step(h, d, with_jacobian, s, dt);
        check_escape(h, d, s, i * dt);
        record(i);
    }
    return traj;
}

PhaseState flow_map(const DiscountedHamiltonian &h, const PhaseState &start, double T, double dt) {
    check_step(T, dt);
    const int d = h.dim();
    const long steps = std::lround(T / dt);
    State s = pack(start, d, false);
    check_escape(h, d, s, 0.0);
    for (long i = 1; i <= steps; ++i) {
        rk4_step(h, d, false, s, dt);
        check_escape(h, d, s, i * dt);
    }
    return unpack(s, d);
}

// ---------------------------------------------------------------------------
// Equilibria

EquilibriumInfo linearize(const DiscountedHamiltonian &h, const PhaseState &location) {
    const int m = 2 * h.dim();
    auto a = vector_field_jacobian(h, location);
    Eigen::MatrixXd mat(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) mat(r, c) = a[r * m + c];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(mat, false);
    EquilibriumInfo info;
    info.location = location;
    for (int i = 0; i < m; ++i) info.eigenvalues.push_back(solver.eigenvalues()[i]);
    std::sort(info.eigenvalues.begin(), info.eigenvalues.end(), [](auto x, auto y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    double scale = 1.0;
    for (auto e : info.eigenvalues) scale = std::max(scale, std::abs(e));
    const double tol = 1e-9 * scale;
    int pos = 0, neg = 0, zero = 0;
    for (auto e : info.eigenvalues) {
        if (e.real() > tol) {
            ++pos;
            if (!info.mu_min_positive || e.real() < *info.mu_min_positive) info.mu_min_positive = e.real();
        } else if (e.real() < -tol) {
            ++neg;
        } else {
            ++zero;
        }
    }
    if (zero > 0) info.classification = "center-like";
    else if (pos == 0) info.classification = "sink";
    else if (neg == 0) info.classification = "source";
    else info.classification = "saddle";
    return info;
}

EquilibriumSet equilibria_find(const DiscountedHamiltonian &h, int seeds_per_axis) {
    if (seeds_per_axis < 8) throw InvalidArgument("equilibria_find needs at least 8 seeds per axis");
    const int d = h.dim();
    const int m = 2 * d;
    const double pb = h.p_bound();
    auto residual = [&](const PhaseState &s) {
        auto v = hamiltonian_vector_field(h, s);
        Eigen::VectorXd r(m);
        for (int k = 0; k < d; ++k) {
            r(k) = v.dx[k];
            r(d + k) = v.dp[k];
        }
        return r;
    };

    std::vector<PhaseState> found;
    const long total = static_cast<long>(std::pow(seeds_per_axis, m));
    for (long id = 0; id < total; ++id) {
        PhaseState s;
        long rest = id;
        for (int c = 0; c < m; ++c) {
            int k = int(rest % seeds_per_axis);
            rest /= seeds_per_axis;
            if (c < d) s.x[c] = double(k) / seeds_per_axis;
            else s.p[c - d] = -pb + 2.0 * pb * (k + 0.5) / seeds_per_axis;
        }
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            Eigen::VectorXd r = residual(s);
            if (r.norm() <= 1e-13) {
                ok = true;
                break;
            }
            auto a = vector_field_jacobian(h, s);
            Eigen::MatrixXd j(m, m);
            for (int rr = 0; rr < m; ++rr)
                for (int cc = 0; cc < m; ++cc) j(rr, cc) = a[rr * m + cc];
            Eigen::VectorXd step = j.completeOrthogonalDecomposition().solve(-r);
            if (!step.allFinite()) break;
            for (int k = 0; k < d; ++k) {
                s.x[k] += step(k);
                s.p[k] += step(d + k);
            }
            if (step.norm() <= 1e-15) {
                ok = residual(s).norm() <= 1e-10;
                break;
            }
        }
        if (!ok) ok = residual(s).norm() <= 1e-10;
        if (!ok) continue;
        bool inside = true;
        for (int k = 0; k < d; ++k) inside = inside && std::abs(s.p[k]) <= pb;
        if (!inside) continue;
        s.x = wrap_unit(s.x);
        for (int k = 0; k < d; ++k)
            if (std::abs(s.x[k] - 1.0) < 1e-12 || std::abs(s.x[k]) < 1e-14) s.x[k] = 0.0;
        bool dup = false;
        for (const auto &f : found) {
            double dist = 0.0;
            for (int k = 0; k < d; ++k) {
                dist = std::max(dist, std::abs(periodic_delta(f.x[k], s.x[k])));
                dist = std::max(dist, std::abs(f.p[k] - s.p[k]));
            }
            if (dist <= 1e-8) {
                dup = true;
                break;
            }
        }
        if (!dup) found.push_back(s);
    }

    EquilibriumSet out;
    out.dim = d;
    for (const auto &s : found) {
        auto info = linearize(h, s);
        if (info.classification == "center-like") {
            // A zero eigenvalue at a converged zero of a gradient-like field
            // means the zeros are not isolated here.
            bool has_zero = false;
            for (auto e : info.eigenvalues) has_zero = has_zero || std::abs(e) <= 1e-8;
            if (has_zero) {
                out.continuum = true;
                out.points.clear();
                return out;
            }
        }
        out.points.push_back(std::move(info));
    }
    std::sort(out.points.begin(), out.points.end(), [](const auto &a, const auto &b) {
        auto ka = std::array<double, 4>{a.location.x[0], a.location.x[1], a.location.p[0], a.location.p[1]};
        auto kb = std::array<double, 4>{b.location.x[0], b.location.x[1], b.location.p[0], b.location.p[1]};
        return ka < kb;
    });
    return out;
}

std::string to_json(const EquilibriumSet &set) {
    nlohmann::ordered_json j;
    j["continuum"] = set.continuum;
    j["equilibria"] = nlohmann::ordered_json::array();
    for (const auto &e : set.points) {
        nlohmann::ordered_json item;
        const int d = set.dim;
        std::vector<double> x(e.location.x.begin(), e.location.x.begin() + d);
        std::vector<double> p(e.location.p.begin(), e.location.p.begin() + d);
        item["x"] = x;
        item["p"] = p;
        auto ev = nlohmann::ordered_json::array();
        for (auto z : e.eigenvalues) ev.push_back({z.real(), z.imag()});
        item["eigenvalues"] = ev;
        item["mu_min_positive"] = e.mu_min_positive ? nlohmann::ordered_json(*e.mu_min_positive) : nlohmann::ordered_json();
        item["classification"] = e.classification;
        j["equilibria"].push_back(item);
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Sublevel regions and clouds

PhaseCloud sublevel_region(const GridFunction &u, const DiscountedHamiltonian &h, int p_samples, double slack) {
    if (p_samples < 2) throw InvalidArgument("sublevel_region needs p_samples >= 2");
    if (u.grid().dim() != h.dim()) throw InvalidArgument("grid and model dimensions differ");
    const int d = h.dim();
    const double pb = h.p_bound();
    std::vector<double> ps(p_samples);
    for (int k = 0; k < p_samples; ++k) ps[k] = pb * double(2 * k - (p_samples - 1)) / double(p_samples - 1);
    PhaseCloud cloud;
    cloud.dim = d;
    const auto &g = u.grid();
    for (std::size_t node = 0; node < g.size(); ++node) {
        Vec x = g.node(node);
        double base = h.lambda() * u[node];
        const int m2 = d == 2 ? p_samples : 1;
        for (int b = 0; b < m2; ++b)
            for (int a = 0; a < p_samples; ++a) {
                Vec p{ps[a], d == 2 ? ps[b] : 0.0};
                if (base + h(x, p) <= slack) cloud.points.push_back({x, p});
            }
    }
    if (cloud.points.empty()) throw EmptyRegion("sublevel set {lambda u + H <= 0} has no sampled points");
    return cloud;
}

PhaseCloud attractor_approximate(const PhaseCloud &cloud, const DiscountedHamiltonian &h, double T, double dt) {
    PhaseCloud out;
    out.dim = cloud.dim;
    out.timestamp = cloud.timestamp + T;
    out.points.reserve(cloud.size());
    for (const auto &s : cloud.points) {
        auto e = flow_map(h, s, T, dt);
        e.x = wrap_unit(e.x);
        out.points.push_back(e);
    }
    return out;
}

bool CloudIndex::Key::operator<(const Key &o) const {
    return std::tie(a, b, c, d) < std::tie(o.a, o.b, o.c, o.d);
}

CloudIndex::CloudIndex(const std::vector<PhaseState> &points, int dim, double hx, double hp)
    : dim_(dim), hx_(hx), hp_(hp), wrap_cells_(std::llround(1.0 / hx)), pts_(points) {
    if (!(hx > 0.0) || !(hp > 0.0)) throw InvalidArgument("cloud cell sizes must be positive");
    buckets_.reserve(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) buckets_.push_back({key_of(scaled(pts_[i])), i});
    std::sort(buckets_.begin(), buckets_.end(), [](const auto &l, const auto &r) {
        return l.first < r.first || (!(r.first < l.first) && l.second < r.second);
    });
}

std::vector<double> CloudIndex::scaled(const PhaseState &s) const {
    std::vector<double> z(2 * dim_);
    for (int k = 0; k < dim_; ++k) {
        z[k] = wrap_unit(s.x[k]) / hx_;
        z[dim_ + k] = s.p[k] / hp_;
    }
    return z;
}

CloudIndex::Key CloudIndex::key_of(const std::vector<double> &z) const {
    std::int64_t c[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < z.size(); ++k) c[k] = static_cast<std::int64_t>(std::floor(z[k]));
    for (int k = 0; k < dim_; ++k) c[k] = ((c[k] % wrap_cells_) + wrap_cells_) % wrap_cells_;
    return {c[0], c[1], c[2], c[3]};
}

double CloudIndex::nearest(const PhaseState &q, double radius) const {
    auto dist2 = [&](const PhaseState &p) {
        double d2 = 0.0;
        for (int k = 0; k < dim_; ++k) {
            double dx = periodic_delta(q.x[k], p.x[k]) / hx_;
            double dp = (q.p[k] - p.p[k]) / hp_;
            d2 += dx * dx + dp * dp;
        }
        return d2;
    };
    double best2 = std::numeric_limits<double>::infinity();
    const int m = 2 * dim_;
    // box volume in cells; past the point count a linear scan is cheaper
    double volume = 1.0;
    for (int k = 0; k < m; ++k)
        volume *= k < dim_ ? std::min(2.0 * std::ceil(radius) + 1.0, double(wrap_cells_)) : 2.0 * std::ceil(radius) + 1.0;
    if (!(volume <= double(pts_.size()))) {
        for (const auto &p : pts_) best2 = std::min(best2, dist2(p));
    } else {
        const auto z = scaled(q);
        const auto r = static_cast<std::int64_t>(std::ceil(radius));
        std::int64_t lo[4] = {0, 0, 0, 0}, span[4] = {1, 1, 1, 1};
        for (int k = 0; k < m; ++k) {
            lo[k] = static_cast<std::int64_t>(std::floor(z[k])) - r;
            span[k] = 2 * r + 1;
            if (k < dim_ && span[k] > wrap_cells_) lo[k] = 0, span[k] = wrap_cells_;
        }
        std::int64_t idx[4];
        const std::int64_t total = span[0] * span[1] * span[2] * span[3];
        for (std::int64_t id = 0; id < total; ++id) {
            std::int64_t rest = id;
            for (int k = 0; k < 4; ++k) {
                idx[k] = lo[k] + rest % span[k];
                rest /= span[k];
            }
            for (int k = 0; k < dim_; ++k) idx[k] = ((idx[k] % wrap_cells_) + wrap_cells_) % wrap_cells_;
            Key key{idx[0], idx[1], idx[2], idx[3]};
            auto it = std::lower_bound(buckets_.begin(), buckets_.end(), key,
                                       [](const auto &e, const Key &k) { return e.first < k; });
            for (; it != buckets_.end() && !(key < it->first); ++it) best2 = std::min(best2, dist2(pts_[it->second]));
        }
    }
    double best = std::sqrt(best2);
    return best <= radius ? best : std::numeric_limits<double>::infinity();
}

double directed_hausdorff(const std::vector<PhaseState> &from, const CloudIndex &to) {
    if (to.size() == 0) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto &q : from) {
        double d = std::numeric_limits<double>::infinity();
        for (double radius : {2.0, 8.0, 32.0, std::numeric_limits<double>::infinity()}) {
            d = to.nearest(q, radius);
            if (std::isfinite(d)) break;
        }
        worst = std::max(worst, d);
    }
    return worst;
}

std::vector<PhaseState> unstable_manifold(const DiscountedHamiltonian &h, const PhaseState &saddle, double eps,
                                          double T, double dt) {
    const int m = 2 * h.dim();
    auto a = vector_field_jacobian(h, saddle);
    Eigen::MatrixXd mat(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) mat(r, c) = a[r * m + c];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(mat, true);
    int pick = -1;
    for (int i = 0; i < m; ++i) {
        auto e = solver.eigenvalues()[i];
        if (std::abs(e.imag()) > 1e-12 || e.real() <= 1e-9) continue;
        if (pick < 0 || e.real() < solver.eigenvalues()[pick].real()) pick = i;
    }
    if (pick < 0) throw InvalidArgument("equilibrium has no real unstable direction");
    Eigen::VectorXd vec = solver.eigenvectors().col(pick).real();
    vec.normalize();
    // Fix the sign so the two branches come out in a reproducible order.
    for (int i = 0; i < m; ++i)
        if (std::abs(vec(i)) > 1e-12) {
            if (vec(i) < 0) vec = -vec;
            break;
        }
    std::vector<PhaseState> out;
    for (double sign : {1.0, -1.0}) {
        PhaseState s = saddle;
        for (int k = 0; k < h.dim(); ++k) {
            s.x[k] += sign * eps * vec(k);
            s.p[k] += sign * eps * vec(h.dim() + k);
        }
        auto traj = integrate(h, s, T, dt, false);
        for (std::size_t i = 0; i < traj.size(); ++i) out.push_back({wrap_unit(traj.positions[i]), traj.second[i]});
    }
    return out;
}

LyapunovReport lyapunov_decay_check(const GridFunction &u, const DiscountedHamiltonian &h,
                                    const LyapunovOptions &opts) {
    if (opts.n_trajectories < 1) throw InvalidArgument("lyapunov check needs at least one trajectory");
    check_step(opts.T, opts.dt);
    const int d = h.dim();
    std::mt19937_64 rng(opts.seed);
    auto uniform = [&rng] { return double(rng() >> 11) * 0x1.0p-53; };
    auto F = [&](const PhaseState &s) { return h.lambda() * interpolate(u, s.x) + h(s.x, s.p); };

    LyapunovReport rep;
    rep.tol = opts.tol;
    rep.trajectories = opts.n_trajectories;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    const long steps = std::lround(opts.T / opts.dt);
    for (int n = 0; n < opts.n_trajectories; ++n) {
        PhaseState start;
        for (int k = 0; k < d; ++k) start.x[k] = uniform();
        for (int k = 0; k < d; ++k) start.p[k] = opts.p_range * (2.0 * uniform() - 1.0);
        const double f0 = F(start);
        State s = pack(start, d, false);
        for (long i = 1; i <= steps; ++i) {
            rk4_step(h, d, false, s, opts.dt);
            check_escape(h, d, s, i * opts.dt);
            double margin = F(unpack(s, d)) - std::exp(-h.lambda() * i * opts.dt) * f0;
            rep.worst_margin = std::max(rep.worst_margin, margin);
            if (margin > opts.tol) ++rep.violations;
        }
    }
    return rep;
}

} // namespace dhj
