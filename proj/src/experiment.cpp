#include "dhj/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "dhj/aubry.hpp"
#include "dhj/error.hpp"
#include "dhj/io.hpp"
#include "dhj/semigroup.hpp"

namespace dhj {

using ojson = nlohmann::ordered_json;

std::string RateReport::to_csv() const {
    std::ostringstream os;
    os << "t,e_t,e_crude\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        os << format_double(times[i]) << ',' << format_double(errors[i]) << ',' << format_double(crude_errors[i])
           << '\n';
    return os.str();
}

std::string RateReport::to_json() const {
    ojson j;
    j["x0"] = {x0[0], x0[1]};
    j["alpha"] = alpha;
    j["mu"] = mu;
    j["lambda"] = lambda;
    j["floor"] = floor;
    j["fit_window"] = {fit_lo, fit_hi};
    j["fit_samples"] = fit_samples;
    j["fitted_slope"] = fitted_slope;
    j["required_slope"] = required_slope;
    j["crude_worst_margin"] = crude_worst_margin;
    return j.dump(2);
}

RateAnchor rate_anchor(const std::vector<AubryPoint> &clusters, const EquilibriumSet &equilibria,
                       const PeriodicGrid &grid) {
    if (equilibria.continuum) throw HypothesisViolation("equilibria are not isolated");
    if (clusters.size() != 1)
        throw HypothesisViolation("Aubry candidates form " + std::to_string(clusters.size()) +
                                  " clusters; a single equilibrium is required");
    const auto &rep = clusters.front();
    for (const auto &e : equilibria.points) {
        if (torus_distance(e.location.x, rep.x, grid.dim()) > 1.5 * grid.h()) continue;
        if (e.classification == "center-like" || !e.mu_min_positive)
            throw HypothesisViolation("the Aubry equilibrium is not hyperbolic with an unstable direction");
        return {rep.node, rep.x, *e.mu_min_positive};
    }
    throw HypothesisViolation("no equilibrium of the phase flow lies at the Aubry candidate");
}

namespace {

double coarse_floor(const GridFunction &fine, const GridFunction &coarse) {
    const auto &gf = fine.grid();
    const auto &gc = coarse.grid();
    if (gc.dim() != gf.dim() || 2 * gc.n() != gf.n()) throw GridMismatch("coarse grid must have n/2 points");
    double floor = 0.0;
    for (std::size_t k = 0; k < gc.size(); ++k) {
        auto ij = gc.multi_index(k);
        floor = std::max(floor, std::abs(coarse[k] - fine[gf.index(2 * ij[0], 2 * ij[1])]));
    }
    return floor;
}

SemigroupConfig coarse_config(const SemigroupConfig &c) {
    SemigroupConfig out = c;
    out.dt = 2.0 * c.dt;
    return out;
}

void sample_errors(const ExperimentConfig &cfg, const Model &model, const GridFunction &u_minus, RateReport &rep) {
    const double dt = cfg.semigroup.dt;
    const long stride = std::max(1L, std::lround(cfg.rate_stride / dt));
    const long total = std::lround(cfg.T_rate / dt);
    GridFunction psi = GridFunction::constant(u_minus.grid(), 0.0);
    for (long k = 0; k <= total; ++k) {
        if (k % stride == 0) {
            const double t = k * dt;
            const double shift = std::exp(-rep.lambda * t) * rep.alpha;
            double e = 0.0, ec = 0.0;
            for (std::size_t i = 0; i < psi.size(); ++i) {
                e = std::max(e, std::abs(psi[i] - u_minus[i] + shift));
                ec = std::max(ec, std::abs(psi[i] - u_minus[i]));
            }
            rep.times.push_back(t);
            rep.errors.push_back(e);
            rep.crude_errors.push_back(ec);
        }
        if (k < total) psi = backward_step(psi, cfg.semigroup, model);
    }
    rep.crude_worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        rep.crude_worst_margin = std::max(rep.crude_worst_margin,
                                          rep.crude_errors[i] - std::exp(-rep.lambda * rep.times[i]) * rep.crude_errors[0]);
}

} // namespace

RateReport crude_rate(const ExperimentConfig &cfg, const Model &model, const GridFunction &u_minus) {
    RateReport rep;
    rep.lambda = model.lambda();
    rep.crude_tol = cfg.tol.tol_semigroup;
    sample_errors(cfg, model, u_minus, rep);
    return rep;
}

RateReport rate_from_solutions(const ExperimentConfig &cfg, const Model &model, const GridFunction &u_minus,
                               const GridFunction &u_coarse, const RateAnchor &anchor) {
    RateReport rep;
    rep.lambda = model.lambda();
    rep.mu = anchor.mu;
    rep.x0 = anchor.x0;
    rep.alpha = u_minus[anchor.node];
    rep.floor = coarse_floor(u_minus, u_coarse);
    rep.required_slope = -0.9 * (rep.mu + rep.lambda);
    rep.crude_tol = cfg.tol.tol_semigroup;

    sample_errors(cfg, model, u_minus, rep);

    rep.fit_lo = 2.0 / (rep.mu + rep.lambda);
    rep.fit_hi = rep.times.back();
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        if (rep.errors[i] < 10.0 * rep.floor) {
            rep.fit_hi = rep.times[i];
            break;
        }
    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        const double t = rep.times[i];
        if (t < rep.fit_lo || t >= rep.fit_hi || !(rep.errors[i] > 0.0)) continue;
        ts.push_back(t);
        ls.push_back(std::log(rep.errors[i]));
    }
    rep.fit_samples = ts.size();
    if (ts.size() < 3) {
        std::ostringstream os;
        os << "only " << ts.size() << " samples between t = " << rep.fit_lo << " and the floor crossing at t = "
           << rep.fit_hi << " (floor " << rep.floor << ")";
        throw FloorDominates(os.str());
    }
    double mt = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        ml += ls[i];
    }
    mt /= double(ts.size());
    ml /= double(ts.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - mt) * (ls[i] - ml);
        sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    rep.fitted_slope = sxy / sxx;
    return rep;
}

RateReport run_rate_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    const Model model = cfg.model();
    PeriodicGrid grid(cfg.dim, cfg.n), coarse(cfg.dim, cfg.n / 2);
    auto fine = solve_stationary(GridFunction::constant(grid, 0.0), cfg.semigroup, model, cfg.solve_tol, cfg.max_iters);
    auto clusters = cluster_candidates(aubry_candidates(fine.u, model, cfg.aubry), grid);
    auto eq = equilibria_find(model.hamiltonian, cfg.seeds_per_axis);
    auto anchor = rate_anchor(clusters, eq, grid);
    auto rough = solve_stationary(GridFunction::constant(coarse, 0.0), coarse_config(cfg.semigroup), model,
                                  cfg.solve_tol, cfg.max_iters);
    return rate_from_solutions(cfg, model, fine.u, rough.u, anchor);
}

// ---------------------------------------------------------------------------
// Suite

const char *contract_status_name(ContractStatus s) {
    switch (s) {
    case ContractStatus::Pass: return "pass";
    case ContractStatus::Fail: return "fail";
    case ContractStatus::Skip: return "skip";
    }
    return "skip";
}

unsigned stages_for_command(const std::string &command) {
    if (command == "solve") return StageSolve;
    if (command == "regularize") return StageSolve | StageRegularize;
    if (command == "aubry") return StageSolve | StageRegularize | StageAubry;
    if (command == "attractor") return StageSolve | StageRegularize | StageAttractor | StageLyapunov;
    if (command == "rate") return StageSolve | StageRate;
    if (command == "check") return StageAll;
    throw InvalidArgument("unknown command '" + command + "'");
}

bool SuiteResult::passed() const {
    return std::none_of(contracts.begin(), contracts.end(),
                        [](const ContractResult &c) { return c.status == ContractStatus::Fail; });
}

const ContractResult *SuiteResult::find(const std::string &name) const {
    for (const auto &c : contracts)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

ojson toml_to_json(const TomlDocument &doc) {
    ojson j = ojson::object();
    for (const auto &[table, entries] : doc.tables()) {
        ojson t = ojson::object();
        for (const auto &[k, v] : entries) std::visit([&](const auto &x) { t[k] = x; }, v);
        if (table.empty()) j.update(t);
        else j[table] = t;
    }
    return j;
}

std::vector<double> vec_json(const Vec &v, int dim) { return std::vector<double>(v.begin(), v.begin() + dim); }

class SuiteRunner {
  public:
    SuiteRunner(const ExperimentConfig &cfg, const std::function<void(const std::string &)> &log)
        : cfg_(cfg), model_(cfg.model()), grid_(cfg.dim, cfg.n), log_(log) {
        // coarse grids cannot host the widest scales
        auto &sc = cfg_.regularity.scales;
        std::erase_if(sc, [&](int m) { return m * grid_.h() >= 0.25; });
        if (sc.empty()) sc = {1};
    }

    SuiteResult run(unsigned stages) {
        ensure_directory(cfg_.output_dir);
        report_["config"] = toml_to_json(cfg_.to_toml());
        report_["stages"] = ojson::object();
        guarded("solve", [&] { solve(); });
        if (!u_) {
            skip_rest(stages & ~unsigned(StageSolve));
        } else {
            if (stages & StageRegularize) guarded("regularize", [&] { regularize_stage(); });
            if (stages & StageAubry) guarded("aubry", [&] { aubry_stage(); });
            if (stages & StageAttractor) guarded("attractor", [&] { attractor_stage(); });
            if (stages & StageLyapunov) guarded("lyapunov", [&] { lyapunov_stage(); });
            if (stages & StageRate) guarded("rate", [&] { rate_stage(); });
        }
        ojson cs = ojson::array();
        for (const auto &c : result_.contracts) {
            ojson item;
            item["name"] = c.name;
            item["status"] = contract_status_name(c.status);
            item["measured"] = std::isfinite(c.measured) ? ojson(c.measured) : ojson(nullptr);
            item["threshold"] = c.threshold;
            if (!c.detail.empty()) item["detail"] = c.detail;
            cs.push_back(item);
        }
        report_["contracts"] = cs;
        report_["passed"] = result_.passed();
        result_.report_json = report_.dump(2) + "\n";
        write("report.json", result_.report_json);
        return result_;
    }

  private:
    void say(const std::string &msg) const {
        if (log_) log_(msg);
    }

    void write(const std::string &name, const std::string &contents) {
        write_text_file(join_path(cfg_.output_dir, name), contents);
        result_.artifacts.push_back(name);
    }

    void contract(const std::string &name, bool ok, double measured, double threshold, std::string detail = {}) {
        result_.contracts.push_back(
            {name, ok ? ContractStatus::Pass : ContractStatus::Fail, measured, threshold, std::move(detail)});
    }

    void skip(const std::string &name, std::string why) {
        result_.contracts.push_back({name, ContractStatus::Skip, std::numeric_limits<double>::quiet_NaN(), 0.0,
                                     std::move(why)});
    }

    template <class F>
    void guarded(const std::string &stage, F &&body) {
        say("stage " + stage);
        try {
            body();
        } catch (const Error &e) {
            report_["stages"][stage]["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
            contract(stage + "_completed", false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                     std::string(error_code_name(e.code())) + ": " + e.what());
            say(std::string("  error: ") + e.what());
        }
    }

    void skip_rest(unsigned stages) {
        const std::pair<Stage, const char *> names[] = {{StageRegularize, "regularize"}, {StageAubry, "aubry"},
                                                        {StageAttractor, "attractor"},   {StageLyapunov, "lyapunov"},
                                                        {StageRate, "rate"}};
        for (const auto &[flag, name] : names)
            if (stages & flag) skip(std::string(name) + "_completed", "skipped after solve failure");
    }

    // -- solve -------------------------------------------------------------
    void solve() {
        auto sol = solve_stationary(GridFunction::constant(grid_, 0.0), cfg_.semigroup, model_, cfg_.solve_tol,
                                    cfg_.max_iters);
        residual_ = residual_field(sol.u, model_);
        write("u_minus.csv", to_csv(sol.u));
        write("residual.csv", to_csv(*residual_));
        write("solve_report.json", sol.report.to_json() + "\n");
        auto raw = second_difference_constants(sol.u, cfg_.regularity.scales);
        ojson s;
        s["iterations"] = sol.report.iterations;
        s["final_increment"] = sol.report.residual_history.back();
        s["u_min"] = sol.u.min();
        s["u_max"] = sol.u.max();
        s["u_at_origin"] = sol.u[0];
        s["residual_max"] = residual_->max();
        s["residual_min"] = residual_->min();
        s["concave_per_scale"] = raw.concave_per_scale;
        s["convex_per_scale"] = raw.convex_per_scale;
        s["scales"] = raw.scales;
        report_["stages"]["solve"] = s;
        u_ = sol.u;
        contract("stationary_converged", sol.report.converged, sol.report.residual_history.back(),
                 cfg_.solve_tol * (1.0 - std::exp(-model_.lambda() * cfg_.semigroup.dt)));
        say("  u_minus in [" + std::to_string(u_->min()) + ", " + std::to_string(u_->max()) + "] after " +
            std::to_string(sol.report.iterations) + " iterations");
    }

    // -- regularize --------------------------------------------------------
    void regularize_stage() {
        RegularityPolicy policy = cfg_.regularity;
        policy.enforce = false;
        auto reg = regularize(*u_, cfg_.reg_t, cfg_.reg_s, cfg_.semigroup, model_, policy);
        w_ = reg.w;
        write("u_reg.csv", to_csv(reg.w));
        auto rw = residual_field(reg.w, model_);
        ojson s;
        s["t"] = cfg_.reg_t;
        s["s"] = cfg_.reg_s;
        s["concave_per_scale"] = reg.constants.concave_per_scale;
        s["convex_per_scale"] = reg.constants.convex_per_scale;
        s["concave_variation"] = reg.concave_variation;
        s["convex_variation"] = reg.convex_variation;
        s["max_excess"] = reg.max_excess;
        s["residual_max"] = rw.max();
        report_["stages"]["regularize"] = s;
        std::ostringstream detail;
        detail << "C_concave " << reg.constants.concave << " (variation " << reg.concave_variation << "), C_convex "
               << reg.constants.convex << " (variation " << reg.convex_variation << ")";
        contract("regularized_c11", reg.regular, std::max(reg.constants.concave, reg.constants.convex),
                 policy.max_constant, detail.str());
        contract("regularized_residual", rw.max() <= cfg_.tol.tol_sub, rw.max(), cfg_.tol.tol_sub);
        contract("order_regularized", reg.max_excess <= cfg_.tol.tol_order, reg.max_excess, cfg_.tol.tol_order);

        // ratio of the finest to the coarsest convex constant of u_minus
        auto raw = second_difference_constants(*u_, policy.scales);
        const double coarse = raw.convex_per_scale.back();
        s["raw_convex_growth"] = coarse > 0.0 ? ojson(raw.convex_per_scale.front() / coarse) : ojson(nullptr);
        report_["stages"]["regularize"] = s;
    }

    // -- shared helpers ----------------------------------------------------
    const EquilibriumSet &equilibria() {
        if (!eq_) {
            eq_ = equilibria_find(model_.hamiltonian, cfg_.seeds_per_axis);
            write("equilibria.json", to_json(*eq_) + "\n");
        }
        return *eq_;
    }

    const std::vector<AubryPoint> &candidates() {
        if (!cand_) {
            cand_ = aubry_candidates(*u_, model_, cfg_.aubry);
            clusters_ = cluster_candidates(*cand_, grid_);
        }
        return *cand_;
    }

    // -- aubry -------------------------------------------------------------
    void aubry_stage() {
        const auto &cand = candidates();
        const auto &eq = equilibria();
        const int d = cfg_.dim;
        ojson s;
        s["candidates"] = cand.size();
        ojson cl = ojson::array();
        double worst_measure = 0.0;
        for (const auto &c : *clusters_) {
            Vec v = model_.hamiltonian.dp(c.x, interpolate_gradient(*u_, c.x));
            double r = constrained_residual(*u_, DiscreteMeasure::dirac(c.x, v), model_);
            worst_measure = std::max(worst_measure, std::abs(r));
            cl.push_back({{"x", vec_json(c.x, d)}, {"node", c.node}, {"v", vec_json(v, d)}, {"dirac_residual", r}});
        }
        s["clusters"] = cl;
        contract("aubry_dirac_residual", worst_measure <= cfg_.tol.tol_measure, worst_measure, cfg_.tol.tol_measure);

        if (eq.continuum) {
            skip("non_aubry_dirac_positive", "equilibria are not isolated");
        } else {
            double least = std::numeric_limits<double>::infinity();
            ojson others = ojson::array();
            for (const auto &e : eq.points) {
                bool in_aubry = std::any_of(cand.begin(), cand.end(), [&](const AubryPoint &a) {
                    return torus_distance(a.x, e.location.x, d) <= 1.5 * grid_.h();
                });
                if (in_aubry) continue;
                double r = constrained_residual(*u_, DiscreteMeasure::dirac(e.location.x, e.location.p), model_);
                others.push_back({{"x", vec_json(e.location.x, d)}, {"dirac_residual", r}});
                least = std::min(least, r);
            }
            s["non_aubry_equilibria"] = others;
            if (others.empty()) skip("non_aubry_dirac_positive", "every equilibrium is an Aubry candidate");
            else contract("non_aubry_dirac_positive", least > 0.0, least, 0.0);
        }

        if (w_) {
            double worst = 0.0;
            for (const auto &c : cand) worst = std::max(worst, std::abs((*w_)[c.node] - (*u_)[c.node]));
            s["regularized_gap_on_aubry"] = worst;
            contract("regularized_matches_aubry", worst <= cfg_.tol.tol_aubry, worst, cfg_.tol.tol_aubry);
        }

        // Calibration along backward characteristics from evenly spaced nodes.
        double worst_defect = -std::numeric_limits<double>::infinity();
        int curves = 0, blowups = 0;
        const std::size_t step = std::max<std::size_t>(1, grid_.size() / 16);
        for (std::size_t node = step / 2; node < grid_.size(); node += step) {
            try {
                auto curve = backward_calibrated_curve(*u_, grid_.node(node), 1.0, cfg_.aubry.dt_curve, model_);
                worst_defect = std::max(worst_defect, std::abs(calibration_defect(*u_, curve, -1.0, 0.0, model_)));
                ++curves;
            } catch (const GradientBlowup &) {
                ++blowups;
            }
        }
        s["calibration_curves"] = curves;
        s["calibration_blowups"] = blowups;
        if (curves > 0) {
            s["calibration_defect_max"] = worst_defect;
            contract("calibration_defect", worst_defect <= 2.0 * cfg_.tol.tol_dom, worst_defect, 2.0 * cfg_.tol.tol_dom);
        } else {
            skip("calibration_defect", "no curve could be integrated");
        }

        BumpPotential bump;
        bump.dim = d;
        bump.height = cfg_.bump_height;
        bump.radius = cfg_.bump_radius;
        bump.neighborhood = cfg_.aubry_neighborhood;
        for (const auto &c : cand) bump.anchors.push_back(c.x);
        auto pert = perturbation_subsolution(model_, grid_, bump, cfg_.semigroup, cfg_.solve_tol, cfg_.max_iters);
        double strict = -std::numeric_limits<double>::infinity(), excess = -std::numeric_limits<double>::infinity();
        double shift = 0.0;
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            excess = std::max(excess, pert.u[k] - (*u_)[k]);
            shift = std::max(shift, std::abs(pert.u[k] - (*u_)[k]));
            if (bump.distance(grid_.node(k)) > bump.neighborhood)
                strict = std::max(strict, pert.strictness[k] + 0.5 * pert.bump[k]);
        }
        s["perturbation"] = {{"bump_height", bump.height},
                             {"bump_radius", bump.radius},
                             {"neighborhood", bump.neighborhood},
                             {"iterations", pert.report.iterations},
                             {"strictness_margin", strict},
                             {"max_excess", excess},
                             {"sup_shift", shift}};
        if (std::isfinite(strict))
            contract("perturbation_strict", strict <= cfg_.tol.tol_strict, strict, cfg_.tol.tol_strict);
        else
            skip("perturbation_strict", "every node lies in the Aubry neighbourhood");
        contract("order_perturbed", excess <= cfg_.tol.tol_order, excess, cfg_.tol.tol_order);
        report_["stages"]["aubry"] = s;

        ojson aj;
        aj["candidates"] = ojson::parse(to_json(cand, d));
        aj["clusters"] = ojson::parse(to_json(*clusters_, d));
        write("aubry.json", aj.dump(2) + "\n");
    }

    // -- attractor ---------------------------------------------------------
    void attractor_stage() {
        const auto &h = model_.hamiltonian;
        const GridFunction &u = w_ ? *w_ : *u_;
        const auto &eq = equilibria();
        const double hx = grid_.h();
        const double hp = 2.0 * h.p_bound() / (cfg_.p_samples - 1);
        ojson s;
        s["field"] = w_ ? "u_reg" : "u_minus";
        s["cell_x"] = hx;
        s["cell_p"] = hp;

        auto cloud = sublevel_region(u, h, cfg_.p_samples, cfg_.sublevel_slack);
        write("sigma_cloud.csv", to_csv(cloud));
        auto image = attractor_approximate(cloud, h, cfg_.T_attractor, cfg_.flow_dt);
        write("attractor_cloud.csv", to_csv(image));
        s["sigma_points"] = cloud.size();
        CloudIndex index(image.points, cfg_.dim, hx, hp);

        if (eq.continuum) {
            skip("attractor_hausdorff", "equilibria are not isolated");
            skip("attractor_contains_equilibria", "equilibria are not isolated");
        } else {
            std::vector<PhaseState> target, eqs;
            int saddles = 0;
            for (const auto &e : eq.points) {
                eqs.push_back(e.location);
                if (e.classification != "saddle") continue;
                int unstable = 0;
                for (auto z : e.eigenvalues) unstable += z.real() > 0.0;
                if (unstable != 1) continue; // only one-dimensional unstable manifolds are traced
                ++saddles;
                auto wu = unstable_manifold(h, e.location, cfg_.manifold_eps, cfg_.manifold_T, cfg_.manifold_dt);
                target.insert(target.end(), wu.begin(), wu.end());
            }
            target.insert(target.end(), eqs.begin(), eqs.end());
            s["traced_saddles"] = saddles;
            double haus = eqs.empty() ? std::numeric_limits<double>::infinity()
                                      : directed_hausdorff(image.points, CloudIndex(target, cfg_.dim, hx, hp));
            s["hausdorff_cells"] = haus;
            contract("attractor_hausdorff", haus <= cfg_.tol.cells_attractor, haus, cfg_.tol.cells_attractor);
            double contain = eqs.empty() ? 0.0 : directed_hausdorff(eqs, index);
            s["equilibria_to_cloud_cells"] = contain;
            contract("attractor_contains_equilibria", contain <= cfg_.tol.cells_attractor, contain,
                     cfg_.tol.cells_attractor);
        }

        auto later = attractor_approximate(image, h, cfg_.T_invariance, cfg_.flow_dt);
        double drift = directed_hausdorff(later.points, index);
        s["invariance_cells"] = drift;
        contract("attractor_invariance", drift <= cfg_.tol.cells_invariance, drift, cfg_.tol.cells_invariance);

        PhaseState start;
        for (int k = 0; k < cfg_.dim; ++k) {
            start.x[k] = 0.3 + 0.1 * k;
            start.p[k] = 0.2;
        }
        auto traj = integrate(h, start, cfg_.T_volume, cfg_.flow_dt, true);
        double det = traj.jacobian_determinant(traj.size() - 1);
        double expect = std::exp(-cfg_.dim * model_.lambda() * cfg_.T_volume);
        s["volume_det"] = det;
        s["volume_expected"] = expect;
        contract("conformal_volume", std::abs(det - expect) <= cfg_.tol.tol_volume, std::abs(det - expect),
                 cfg_.tol.tol_volume);
        report_["stages"]["attractor"] = s;
    }

    // -- lyapunov ----------------------------------------------------------
    void lyapunov_stage() {
        const GridFunction &u = w_ ? *w_ : *u_;
        LyapunovOptions opts;
        opts.n_trajectories = cfg_.lyapunov_trajectories;
        opts.T = cfg_.T_lyapunov;
        opts.dt = cfg_.flow_dt;
        opts.p_range = cfg_.lyapunov_p_range;
        opts.tol = cfg_.tol.tol_lyap;
        opts.seed = cfg_.seed;
        auto rep = lyapunov_decay_check(u, model_.hamiltonian, opts);
        report_["stages"]["lyapunov"] = {{"field", w_ ? "u_reg" : "u_minus"},
                                         {"trajectories", rep.trajectories},
                                         {"violations", rep.violations},
                                         {"worst_margin", rep.worst_margin}};
        contract("lyapunov_decay", rep.passed(), rep.worst_margin, rep.tol);
    }

    // -- rate --------------------------------------------------------------
    void rate_stage() {
        std::optional<RateAnchor> anchor;
        std::string why;
        try {
            candidates();
            anchor = rate_anchor(*clusters_, equilibria(), grid_);
        } catch (const HypothesisViolation &e) {
            why = std::string("HypothesisViolation: ") + e.what();
        } catch (const EmptyAubry &e) {
            why = std::string("EmptyAubry: ") + e.what();
        }
        RateReport rep;
        if (anchor) {
            say("  coarse solve for the error floor");
            PeriodicGrid coarse(cfg_.dim, cfg_.n / 2);
            auto rough = solve_stationary(GridFunction::constant(coarse, 0.0), coarse_config(cfg_.semigroup), model_,
                                          cfg_.solve_tol, cfg_.max_iters);
            try {
                rep = rate_from_solutions(cfg_, model_, *u_, rough.u, *anchor);
            } catch (const FloorDominates &e) {
                contract("rate_slope", false, std::numeric_limits<double>::quiet_NaN(),
                         -0.9 * (anchor->mu + model_.lambda()), std::string("FloorDominates: ") + e.what());
                anchor.reset();
                why = e.what();
            }
        } else {
            skip("rate_slope", why);
        }
        if (!anchor) rep = crude_rate(cfg_, model_, *u_);
        write("rate.csv", rep.to_csv());
        ojson s = ojson::parse(rep.to_json());
        if (!anchor) {
            for (const char *k : {"x0", "alpha", "mu", "floor", "fit_window", "fit_samples", "fitted_slope", "required_slope"})
                s.erase(k);
            s["slope_not_fitted"] = why;
        }
        report_["stages"]["rate"] = s;
        if (anchor) contract("rate_slope", rep.slope_ok(), rep.fitted_slope, rep.required_slope);
        contract("rate_crude", rep.crude_ok(), rep.crude_worst_margin, rep.crude_tol);
    }

    ExperimentConfig cfg_;
    Model model_;
    PeriodicGrid grid_;
    std::function<void(const std::string &)> log_;
    ojson report_;
    SuiteResult result_;
    std::optional<GridFunction> u_, residual_, w_;
    std::optional<EquilibriumSet> eq_;
    std::optional<std::vector<AubryPoint>> cand_, clusters_;
};

} // namespace

SuiteResult run_suite(const ExperimentConfig &cfg, unsigned stages, const std::function<void(const std::string &)> &log) {
    cfg.validate();
    if (!(stages & StageSolve)) throw InvalidArgument("every suite run starts with the solve stage");
    SuiteRunner runner(cfg, log);
    return runner.run(stages);
}

} // namespace dhj
