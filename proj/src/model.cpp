#include "dhj/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

#include "dhj/detail/minimize.hpp"

namespace dhj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec unit(int k) { return k == 0 ? Vec{1.0, 0.0} : Vec{0.0, 1.0}; }

void require_dim(int dim) {
    if (dim != 1 && dim != 2) throw InvalidArgument("dimension must be 1 or 2");
}

} // namespace

// ---------------------------------------------------------------------------
// DiscountedHamiltonian

DiscountedHamiltonian::DiscountedHamiltonian(int dim, double lambda, ValueFn h, double p_bound)
    : dim_(dim), lambda_(lambda), p_bound_(p_bound), h_(std::move(h)) {
    require_dim(dim);
    if (!(lambda > 0.0)) throw InvalidArgument("discount rate lambda must be positive");
    if (!(p_bound > 0.0)) throw InvalidArgument("p_bound must be positive");
    if (!h_) throw InvalidArgument("Hamiltonian callback is empty");
}

DiscountedHamiltonian DiscountedHamiltonian::with_dx(VecFn h_x) const {
    auto copy = *this;
    copy.h_x_ = std::move(h_x);
    return copy;
}

DiscountedHamiltonian DiscountedHamiltonian::with_dp(VecFn h_p) const {
    auto copy = *this;
    copy.h_p_ = std::move(h_p);
    return copy;
}

DiscountedHamiltonian DiscountedHamiltonian::with_hessian(HessianFn hess) const {
    auto copy = *this;
    copy.hess_ = std::move(hess);
    return copy;
}

DiscountedHamiltonian DiscountedHamiltonian::with_lambda(double lambda) const {
    if (!(lambda > 0.0)) throw InvalidArgument("discount rate lambda must be positive");
    auto copy = *this;
    copy.lambda_ = lambda;
    return copy;
}

DiscountedHamiltonian DiscountedHamiltonian::with_p_bound(double p_bound) const {
    if (!(p_bound > 0.0)) throw InvalidArgument("p_bound must be positive");
    auto copy = *this;
    copy.p_bound_ = p_bound;
    return copy;
}

DiscountedHamiltonian DiscountedHamiltonian::with_fd_step(double step) const {
    if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    auto copy = *this;
    copy.fd_step_ = step;
    return copy;
}

Vec DiscountedHamiltonian::dx_numeric(const Vec &x, const Vec &p) const {
    Vec g{};
    for (int k = 0; k < dim_; ++k) {
        Vec e = fd_step_ * unit(k);
        g[k] = (h_(x + e, p) - h_(x - e, p)) / (2.0 * fd_step_);
    }
    return g;
}

Vec DiscountedHamiltonian::dp_numeric(const Vec &x, const Vec &p) const {
    Vec g{};
    for (int k = 0; k < dim_; ++k) {
        Vec e = fd_step_ * unit(k);
        g[k] = (h_(x, p + e) - h_(x, p - e)) / (2.0 * fd_step_);
    }
    return g;
}

Vec DiscountedHamiltonian::dx(const Vec &x, const Vec &p) const {
    return h_x_ ? h_x_(x, p) : dx_numeric(x, p);
}

Vec DiscountedHamiltonian::dp(const Vec &x, const Vec &p) const {
    return h_p_ ? h_p_(x, p) : dp_numeric(x, p);
}

HamiltonianHessian DiscountedHamiltonian::hessian(const Vec &x, const Vec &p) const {
    if (hess_) return hess_(x, p);
    HamiltonianHessian out;
    const double s = fd_step_;
    for (int j = 0; j < dim_; ++j) {
        Vec e = s * unit(j);
        Vec gx_plus = dx(x + e, p), gx_minus = dx(x - e, p);
        Vec gp_xplus = dp(x + e, p), gp_xminus = dp(x - e, p);
        Vec gp_plus = dp(x, p + e), gp_minus = dp(x, p - e);
        for (int i = 0; i < dim_; ++i) {
            out.xx[i][j] = (gx_plus[i] - gx_minus[i]) / (2.0 * s);
            // d/dx_j of H_{p_i} = d^2H / dx_j dp_i
            out.xp[j][i] = (gp_xplus[i] - gp_xminus[i]) / (2.0 * s);
            out.pp[i][j] = (gp_plus[i] - gp_minus[i]) / (2.0 * s);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Legendre transform

LegendreResult legendre_transform(const DiscountedHamiltonian &h, const Vec &x, const Vec &v,
                                  const LegendreOptions &opts) {
    const int dim = h.dim();
    const double pb = h.p_bound();
    const int n = opts.grid_points;
    if (n < 3) throw InvalidArgument("Legendre grid needs at least 3 points per axis");
    const double spacing = 2.0 * pb / (n - 1);

    // Minimize the negated objective.
    auto neg = [&](const Vec &p) { return h(x, p) - dot(p, v); };

    Vec best_p{};
    double best = std::numeric_limits<double>::infinity();
    const int n2 = dim == 2 ? n : 1;
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n; ++i) {
            Vec p{-pb + i * spacing, dim == 2 ? -pb + j * spacing : 0.0};
            double f = neg(p);
            if (f < best) {
                best = f;
                best_p = p;
            }
        }
    }

    const int sweeps = dim == 2 ? opts.sweeps_2d : 1;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int k = 0; k < dim; ++k) {
            double lo = std::max(-pb, best_p[k] - spacing);
            double hi = std::min(pb, best_p[k] + spacing);
            int iters = detail::golden_iterations(hi - lo, opts.tol_p);
            Vec base = best_p;
            auto line = [&](double t) {
                Vec p = base;
                p[k] = t;
                return neg(p);
            };
            auto r = detail::golden_minimize(line, lo, hi, iters, best_p[k], best);
            best_p[k] = r.arg;
            best = r.value;
        }
    }

    for (int k = 0; k < dim; ++k) {
        if (pb - std::abs(best_p[k]) <= 10.0 * opts.tol_p) {
            std::ostringstream os;
            os << "Legendre maximizer on the momentum box boundary (p_bound = " << pb
               << ", v = " << v[0];
            if (dim == 2) os << ", " << v[1];
            os << ")";
            throw MaximizerOnBoundary(os.str());
        }
    }
    return {-best, best_p};
}

// ---------------------------------------------------------------------------
// LagrangianView

LagrangianView::LagrangianView(DiscountedHamiltonian source, double v_bound, LegendreOptions opts)
    : source_(std::move(source)), mode_(LagrangianMode::NumericLegendre), v_bound_(v_bound),
      opts_(opts) {
    if (!(v_bound > 0.0)) throw InvalidArgument("v_bound must be positive");
}

LagrangianView::LagrangianView(DiscountedHamiltonian source, ValueFn l_eval, double v_bound)
    : source_(std::move(source)), mode_(LagrangianMode::Analytic), l_eval_(std::move(l_eval)),
      v_bound_(v_bound) {
    if (!(v_bound > 0.0)) throw InvalidArgument("v_bound must be positive");
    if (!l_eval_) throw InvalidArgument("Lagrangian callback is empty");
}

double LagrangianView::operator()(const Vec &x, const Vec &v) const {
    if (mode_ == LagrangianMode::Analytic) return l_eval_(x, v);
    return legendre_transform(source_, x, v, opts_).value;
}

Model with_potential(const Model &model, PotentialTerm term) {
    if (!term.value || !term.gradient) throw InvalidArgument("potential term needs value and gradient");
    const auto &base = model.hamiltonian;
    auto value = term.value;
    auto grad = term.gradient;
    auto hess = term.hessian;
    const int dim = base.dim();

    DiscountedHamiltonian h(
        dim, base.lambda(), [base, value](const Vec &x, const Vec &p) { return base(x, p) + value(x); },
        base.p_bound());
    h = h.with_fd_step(base.fd_step())
            .with_dx([base, grad](const Vec &x, const Vec &p) { return base.dx(x, p) + grad(x); })
            .with_dp([base](const Vec &x, const Vec &p) { return base.dp(x, p); })
            .with_hessian([base, grad, hess, dim](const Vec &x, const Vec &p) {
                HamiltonianHessian out = base.hessian(x, p);
                Mat2 vxx{};
                if (hess) {
                    vxx = hess(x);
                } else {
                    const double s = base.fd_step();
                    for (int j = 0; j < dim; ++j) {
                        Vec e = s * unit(j);
                        Vec gp = grad(x + e), gm = grad(x - e);
                        for (int i = 0; i < dim; ++i) vxx[i][j] = (gp[i] - gm[i]) / (2.0 * s);
                    }
                }
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) out.xx[i][j] += vxx[i][j];
                return out;
            });

    const auto &lag = model.lagrangian;
    if (lag.mode() == LagrangianMode::Analytic) {
        LagrangianView l(h, [lag, value](const Vec &x, const Vec &v) { return lag(x, v) - value(x); },
                         lag.v_bound());
        return Model{h, l};
    }
    return Model{h, LagrangianView(h, lag.v_bound())};
}

// ---------------------------------------------------------------------------
// MechanicalPreset

double MechanicalPreset::potential(const Vec &x) const {
    double v = offset;
    for (const auto &m : modes) {
        double arg = kTwoPi * (m.wave[0] * x[0] + (dim == 2 ? m.wave[1] * x[1] : 0.0)) + m.phase;
        v += m.amplitude * std::cos(arg);
    }
    return v;
}

Vec MechanicalPreset::potential_gradient(const Vec &x) const {
    Vec g{};
    for (const auto &m : modes) {
        double arg = kTwoPi * (m.wave[0] * x[0] + (dim == 2 ? m.wave[1] * x[1] : 0.0)) + m.phase;
        double s = -m.amplitude * kTwoPi * std::sin(arg);
        for (int k = 0; k < dim; ++k) g[k] += s * m.wave[k];
    }
    return g;
}

Mat2 MechanicalPreset::potential_hessian(const Vec &x) const {
    Mat2 hm{};
    for (const auto &m : modes) {
        double arg = kTwoPi * (m.wave[0] * x[0] + (dim == 2 ? m.wave[1] * x[1] : 0.0)) + m.phase;
        double c = -m.amplitude * kTwoPi * kTwoPi * std::cos(arg);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) hm[i][j] += c * m.wave[i] * m.wave[j];
    }
    return hm;
}

double MechanicalPreset::max_potential_slope() const {
    double s = 0.0;
    for (const auto &m : modes) {
        double k2 = m.wave[0] * m.wave[0] + (dim == 2 ? m.wave[1] * m.wave[1] : 0);
        s += std::abs(m.amplitude) * kTwoPi * std::sqrt(k2);
    }
    return s;
}

double MechanicalPreset::default_v_bound() const { return 4.0 + 2.0 * max_potential_slope(); }

double MechanicalPreset::default_p_bound() const {
    return default_v_bound() + std::max(std::abs(shift[0]), std::abs(shift[1]));
}

DiscountedHamiltonian MechanicalPreset::hamiltonian(double lambda) const {
    require_dim(dim);
    const MechanicalPreset self = *this;
    DiscountedHamiltonian h(
        dim, lambda,
        [self](const Vec &x, const Vec &p) {
            Vec q = p - self.shift;
            if (self.dim == 1) q[1] = 0.0;
            return 0.5 * dot(q, q) + self.potential(x);
        },
        default_p_bound());
    return h.with_dx([self](const Vec &x, const Vec &) { return self.potential_gradient(x); })
        .with_dp([self](const Vec &, const Vec &p) {
            Vec q = p - self.shift;
            if (self.dim == 1) q[1] = 0.0;
            return q;
        })
        .with_hessian([self](const Vec &x, const Vec &) {
            HamiltonianHessian out;
            out.xx = self.potential_hessian(x);
            for (int k = 0; k < self.dim; ++k) out.pp[k][k] = 1.0;
            return out;
        });
}

Model MechanicalPreset::model(double lambda) const {
    auto h = hamiltonian(lambda);
    const MechanicalPreset self = *this;
    LagrangianView l(
        h,
        [self](const Vec &x, const Vec &v) {
            Vec w = v;
            if (self.dim == 1) w[1] = 0.0;
            return 0.5 * dot(w, w) + dot(self.shift, w) - self.potential(x);
        },
        default_v_bound());
    return Model{h, l};
}

Model MechanicalPreset::numeric_model(double lambda, LegendreOptions opts) const {
    auto h = hamiltonian(lambda);
    return Model{h, LagrangianView(h, default_v_bound(), opts)};
}

MechanicalPreset MechanicalPreset::free(int dim) {
    MechanicalPreset m;
    m.dim = dim;
    return m;
}

MechanicalPreset MechanicalPreset::constant(double c, int dim) {
    MechanicalPreset m;
    m.dim = dim;
    m.offset = c;
    return m;
}

MechanicalPreset MechanicalPreset::cosine(double amplitude, int dim) {
    MechanicalPreset m;
    m.dim = dim;
    m.modes.push_back({amplitude, {1, 0}, 0.0});
    if (dim == 2) m.modes.push_back({amplitude, {0, 1}, 0.0});
    return m;
}

MechanicalPreset MechanicalPreset::two_well(double amplitude) {
    MechanicalPreset m;
    m.modes.push_back({amplitude, {2, 0}, 0.0});
    return m;
}

MechanicalPreset MechanicalPreset::shifted(Vec shift, double amplitude, int dim) {
    MechanicalPreset m = amplitude != 0.0 ? cosine(amplitude, dim) : free(dim);
    m.shift = shift;
    if (dim == 1) m.shift[1] = 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Vector field and convexity diagnostics

PhaseVelocity hamiltonian_vector_field(const DiscountedHamiltonian &h, const PhaseState &s) {
    Vec hx = h.dx(s.x, s.p);
    PhaseVelocity out;
    out.dx = h.dp(s.x, s.p);
    out.dp = -hx - h.lambda() * s.p;
    if (h.dim() == 1) {
        out.dx[1] = 0.0;
        out.dp[1] = 0.0;
    }
    return out;
}

ConvexityViolation::ConvexityViolation(ConvexityReport report)
    : Error(ErrorCode::ConvexityViolation,
            "Hamiltonian fails the Tonelli checks at " + std::to_string(report.violations.size()) +
                " sample(s)"),
      report_(std::move(report)) {}

ConvexityReport convexity_report(const DiscountedHamiltonian &h, int n_samples, unsigned seed) {
    if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
    const int dim = h.dim();
    const double pb = h.p_bound();
    const double step = pb / 64.0;
    constexpr int kRadii = 8;

    std::vector<Vec> directions;
    for (int k = 0; k < dim; ++k) {
        directions.push_back(unit(k));
        directions.push_back(-unit(k));
    }
    if (dim == 2) {
        const double r = 1.0 / std::sqrt(2.0);
        directions.push_back({r, r});
        directions.push_back({-r, -r});
        directions.push_back({r, -r});
        directions.push_back({-r, r});
    }

    ConvexityReport rep;
    rep.min_second_difference = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= kRadii; ++j) rep.radii.push_back(pb * j / kRadii);
    rep.min_ratio.assign(kRadii, std::numeric_limits<double>::infinity());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::uniform_real_distribution<double> up(-pb + step, pb - step);

    for (int s = 0; s < n_samples; ++s) {
        Vec x{ux(rng), dim == 2 ? ux(rng) : 0.0};
        Vec p{up(rng), dim == 2 ? up(rng) : 0.0};
        const double h0 = h(x, p);
        for (const auto &d : directions) {
            double q = (h(x, p + step * d) + h(x, p - step * d) - 2.0 * h0) / (step * step);
            rep.min_second_difference = std::min(rep.min_second_difference, q);
            if (!(q > 0.0)) rep.violations.push_back({x, p, d, q, "second-difference"});
        }
        const double base = h(x, Vec{});
        for (const auto &d : directions) {
            double prev = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < kRadii; ++j) {
                double r = rep.radii[j];
                double ratio = (h(x, r * d) - base) / r;
                rep.min_ratio[j] = std::min(rep.min_ratio[j], ratio);
                if (!(ratio > prev)) {
                    rep.violations.push_back({x, r * d, d, ratio - prev, "superlinearity"});
                    break;
                }
                prev = ratio;
            }
        }
    }
    return rep;
}

ConvexityReport check_tonelli(const DiscountedHamiltonian &h, int n_samples, unsigned seed) {
    auto rep = convexity_report(h, n_samples, seed);
    if (!rep.ok()) throw ConvexityViolation(std::move(rep));
    return rep;
}

} // namespace dhj
