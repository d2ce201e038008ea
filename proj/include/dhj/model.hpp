#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dhj/error.hpp"
#include "dhj/vec.hpp"

namespace dhj {

/// Second derivatives of H at a phase point; xp(i,j) = d^2H / dx_i dp_j.
struct HamiltonianHessian {
    Mat2 xx{};
    Mat2 xp{};
    Mat2 pp{};
};

struct PhaseState {
    Vec x{};
    Vec p{};
};

/// Time derivative of a phase state: (dx/dt, dp/dt).
struct PhaseVelocity {
    Vec dx{};
    Vec dp{};
};

/// Tonelli Hamiltonian H(x, p) on T^dim together with its discount rate.
///
/// Fiber derivatives are analytic when supplied, otherwise central differences
/// with step `fd_step()` are used. Instances are immutable and cheap to copy.
class DiscountedHamiltonian {
  public:
    using ValueFn = std::function<double(const Vec &, const Vec &)>;
    using VecFn = std::function<Vec(const Vec &, const Vec &)>;
    using HessianFn = std::function<HamiltonianHessian(const Vec &, const Vec &)>;

    DiscountedHamiltonian(int dim, double lambda, ValueFn h, double p_bound);

    DiscountedHamiltonian with_dx(VecFn h_x) const;
    DiscountedHamiltonian with_dp(VecFn h_p) const;
    DiscountedHamiltonian with_hessian(HessianFn hess) const;
    DiscountedHamiltonian with_lambda(double lambda) const;
    DiscountedHamiltonian with_p_bound(double p_bound) const;
    DiscountedHamiltonian with_fd_step(double step) const;

    int dim() const noexcept { return dim_; }
    double lambda() const noexcept { return lambda_; }
    double p_bound() const noexcept { return p_bound_; }
    double fd_step() const noexcept { return fd_step_; }
    bool has_analytic_dx() const noexcept { return static_cast<bool>(h_x_); }
    bool has_analytic_dp() const noexcept { return static_cast<bool>(h_p_); }

    double operator()(const Vec &x, const Vec &p) const { return h_(x, p); }

    Vec dx(const Vec &x, const Vec &p) const;
    Vec dp(const Vec &x, const Vec &p) const;
    /// Central-difference derivatives, ignoring any analytic hint.
    Vec dx_numeric(const Vec &x, const Vec &p) const;
    Vec dp_numeric(const Vec &x, const Vec &p) const;
    HamiltonianHessian hessian(const Vec &x, const Vec &p) const;

  private:
    int dim_;
    double lambda_;
    double p_bound_;
    double fd_step_ = 1e-5;
    ValueFn h_;
    VecFn h_x_;
    VecFn h_p_;
    HessianFn hess_;
};

struct LegendreOptions {
    int grid_points = 64; // per axis, over [-p_bound, p_bound]
    double tol_p = 1e-8;
    int sweeps_2d = 6;    // coordinate sweeps of the per-axis refinement in 2D
};

struct LegendreResult {
    double value = 0.0; // L(x, v)
    Vec p_star{};       // maximizer of <p, v> - H(x, p)
};

/// L(x, v) = max_p { <p, v> - H(x, p) } over the box |p_k| <= p_bound.
/// Throws MaximizerOnBoundary when the maximizer sits on the box edge.
LegendreResult legendre_transform(const DiscountedHamiltonian &h, const Vec &x, const Vec &v,
                                  const LegendreOptions &opts = {});

enum class LagrangianMode { Analytic, NumericLegendre };

/// Lagrangian dual of a DiscountedHamiltonian, either closed-form or evaluated
/// through `legendre_transform`.
class LagrangianView {
  public:
    using ValueFn = DiscountedHamiltonian::ValueFn;

    /// Numeric Legendre transform of `source`.
    LagrangianView(DiscountedHamiltonian source, double v_bound, LegendreOptions opts = {});
    /// Closed-form Lagrangian supplied by the caller.
    LagrangianView(DiscountedHamiltonian source, ValueFn l_eval, double v_bound);

    const DiscountedHamiltonian &source() const noexcept { return source_; }
    LagrangianMode mode() const noexcept { return mode_; }
    double v_bound() const noexcept { return v_bound_; }
    double lambda() const noexcept { return source_.lambda(); }
    int dim() const noexcept { return source_.dim(); }

    double operator()(const Vec &x, const Vec &v) const;

  private:
    DiscountedHamiltonian source_;
    LagrangianMode mode_;
    ValueFn l_eval_;
    double v_bound_;
    LegendreOptions opts_;
};

/// A Hamiltonian/Lagrangian pair, the unit every solver operates on.
struct Model {
    DiscountedHamiltonian hamiltonian;
    LagrangianView lagrangian;

    int dim() const noexcept { return hamiltonian.dim(); }
    double lambda() const noexcept { return hamiltonian.lambda(); }
    double p_bound() const noexcept { return hamiltonian.p_bound(); }
    double v_bound() const noexcept { return lagrangian.v_bound(); }
};

/// Potential term added to a model: H + V, L - V.
struct PotentialTerm {
    std::function<double(const Vec &)> value;
    std::function<Vec(const Vec &)> gradient;
    std::function<Mat2(const Vec &)> hessian; // optional
};

Model with_potential(const Model &model, PotentialTerm term);

/// One Fourier mode a * cos(2 pi <k, x> + phase) of a mechanical potential.
struct CosineMode {
    double amplitude = 1.0;
    std::array<int, 2> wave{1, 0};
    double phase = 0.0;
};

/// H(x, p) = |p - shift|^2 / 2 + V(x) with V a finite cosine series.
struct MechanicalPreset {
    int dim = 1;
    double offset = 0.0;
    std::vector<CosineMode> modes;
    Vec shift{};

    double potential(const Vec &x) const;
    Vec potential_gradient(const Vec &x) const;
    Mat2 potential_hessian(const Vec &x) const;
    /// Upper bound on |grad V| from the mode amplitudes.
    double max_potential_slope() const;
    /// 4 + 2 max|V'|, widened by |shift| for the momentum box.
    double default_v_bound() const;
    double default_p_bound() const;

    DiscountedHamiltonian hamiltonian(double lambda) const;
    /// Closed-form dual L(x, v) = |v|^2/2 + <shift, v> - V(x).
    Model model(double lambda) const;
    /// Same Hamiltonian with the Lagrangian obtained by numeric Legendre transform.
    Model numeric_model(double lambda, LegendreOptions opts = {}) const;

    static MechanicalPreset free(int dim = 1);
    static MechanicalPreset constant(double c, int dim = 1);
    static MechanicalPreset cosine(double amplitude = 1.0, int dim = 1);
    static MechanicalPreset two_well(double amplitude = 1.0);
    static MechanicalPreset shifted(Vec shift, double amplitude = 0.0, int dim = 1);
};

/// (H_p, -H_x - lambda p).
PhaseVelocity hamiltonian_vector_field(const DiscountedHamiltonian &h, const PhaseState &s);

struct ConvexitySample {
    Vec x{};
    Vec p{};
    Vec direction{};
    double value = 0.0; // offending second difference or ratio drop
    std::string kind;   // "second-difference" or "superlinearity"
};

struct ConvexityReport {
    double min_second_difference = 0.0; // normalized by step^2
    std::vector<double> radii;
    std::vector<double> min_ratio; // min over samples of (H(x, r d) - H(x, 0)) / r
    std::vector<ConvexitySample> violations;

    bool ok() const noexcept { return violations.empty(); }
};

class ConvexityViolation : public Error {
  public:
    explicit ConvexityViolation(ConvexityReport report);
    const ConvexityReport &report() const noexcept { return report_; }

  private:
    ConvexityReport report_;
};

/// Discrete checks of fiber convexity and superlinearity on sampled (x, p).
ConvexityReport convexity_report(const DiscountedHamiltonian &h, int n_samples,
                                 unsigned seed = 7);

/// Same as `convexity_report` but throws ConvexityViolation on any violation.
ConvexityReport check_tonelli(const DiscountedHamiltonian &h, int n_samples, unsigned seed = 7);

} // namespace dhj
