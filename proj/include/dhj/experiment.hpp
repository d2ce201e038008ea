#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dhj/config.hpp"
#include "dhj/flow.hpp"
#include "dhj/grid.hpp"

namespace dhj {

struct RateReport {
    std::vector<double> times;
    std::vector<double> errors;       // sup |T_t 0 - u_minus + e^{-lambda t} alpha|
    std::vector<double> crude_errors; // sup |T_t 0 - u_minus|
    Vec x0{};
    double alpha = 0.0;
    double mu = 0.0;
    double lambda = 0.0;
    double floor = 0.0;
    double fit_lo = 0.0;
    double fit_hi = 0.0;
    std::size_t fit_samples = 0;
    double fitted_slope = 0.0;
    double required_slope = 0.0;     // -0.9 (mu + lambda)
    double crude_worst_margin = 0.0; // max of e'_t - e^{-lambda t} e'_0
    double crude_tol = 0.0;

    bool slope_ok() const noexcept { return fitted_slope <= required_slope; }
    bool crude_ok() const noexcept { return crude_worst_margin <= crude_tol; }
    /// `t,e_t,e_crude` rows.
    std::string to_csv() const;
    std::string to_json() const;
};

/// The equilibrium the rate experiment is anchored at.
struct RateAnchor {
    std::size_t node = 0;
    Vec x0{};
    double mu = 0.0;
};

/// Verifies that the Aubry candidates form one cluster sitting on a
/// hyperbolic equilibrium. Throws HypothesisViolation otherwise.
RateAnchor rate_anchor(const std::vector<AubryPoint> &clusters, const EquilibriumSet &equilibria,
                       const PeriodicGrid &grid);

/// Error-decay study from psi = 0 given u_minus at (n, dt) and (n/2, 2 dt).
/// Throws FloorDominates when fewer than 3 samples fall in the fit window.
RateReport rate_from_solutions(const ExperimentConfig &cfg, const Model &model, const GridFunction &u_minus,
                               const GridFunction &u_coarse, const RateAnchor &anchor);

/// Only the crude samples e'_t; no anchor needed.
RateReport crude_rate(const ExperimentConfig &cfg, const Model &model, const GridFunction &u_minus);

/// Full experiment: solves both resolutions, checks the hypothesis, fits.
RateReport run_rate_experiment(const ExperimentConfig &cfg);

enum class ContractStatus { Pass, Fail, Skip };

struct ContractResult {
    std::string name;
    ContractStatus status = ContractStatus::Skip;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

enum Stage : unsigned {
    StageSolve = 1u << 0,
    StageRegularize = 1u << 1,
    StageAubry = 1u << 2,
    StageAttractor = 1u << 3,
    StageLyapunov = 1u << 4,
    StageRate = 1u << 5,
    StageAll = 0x3fu,
};

/// Stages for a CLI subcommand name (solve, regularize, aubry, attractor, rate, check).
unsigned stages_for_command(const std::string &command);

struct SuiteResult {
    std::vector<ContractResult> contracts;
    std::string report_json; // contents written to report.json
    std::vector<std::string> artifacts; // file names written, in order

    bool passed() const;
    int exit_status() const { return passed() ? 0 : 1; }
    const ContractResult *find(const std::string &name) const;
};

/// Runs the requested stages in order and writes artifacts into cfg.output_dir.
/// Progress lines go to `log` when provided.
SuiteResult run_suite(const ExperimentConfig &cfg, unsigned stages = StageAll,
                      const std::function<void(const std::string &)> &log = {});

const char *contract_status_name(ContractStatus s);

} // namespace dhj
