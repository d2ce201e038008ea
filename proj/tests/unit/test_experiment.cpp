#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "json.hpp"

#include "dhj/error.hpp"
#include "dhj/experiment.hpp"
#include "dhj/io.hpp"

using namespace dhj;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = std::numbers::pi;

std::string scratch_dir(const std::string &name) {
    auto p = fs::temp_directory_path() / ("dhj_unit_" + name);
    fs::remove_all(p);
    return p.string();
}

ExperimentConfig small(const std::string &preset, int n, double dt) {
    ExperimentConfig c;
    c.preset = preset;
    c.n = n;
    c.semigroup.dt = dt;
    c.lambda = preset == "free" ? 1.0 : 0.5;
    c.p_samples = 33;
    c.lyapunov_trajectories = 10;
    c.T_lyapunov = 1.0;
    c.T_attractor = 3.0;
    c.manifold_T = 20.0;
    c.manifold_dt = 1e-3;
    c.T_rate = 1.0;
    c.rate_stride = 2 * dt;
    return c;
}
} // namespace

TEST_CASE("command names map to stage sets") {
    CHECK(stages_for_command("solve") == StageSolve);
    CHECK(stages_for_command("check") == StageAll);
    CHECK((stages_for_command("rate") & StageRate) != 0);
    CHECK((stages_for_command("aubry") & StageAttractor) == 0);
    CHECK_THROWS_AS(stages_for_command("plot"), InvalidArgument);
}

TEST_CASE("rate anchor hypothesis") {
    PeriodicGrid g(1, 64);
    EquilibriumSet cont;
    cont.continuum = true;
    CHECK_THROWS_AS(rate_anchor({{}}, cont, g), HypothesisViolation);

    EquilibriumSet eq;
    EquilibriumInfo saddle;
    saddle.location = {{0.0, 0.0}, {0.0, 0.0}};
    saddle.classification = "saddle";
    saddle.mu_min_positive = 6.0;
    eq.points = {saddle};
    AubryPoint at0{{0.0, 0.0}, 0, 0.0}, at_half{{0.5, 0.0}, 32, 0.0};
    auto a = rate_anchor({at0}, eq, g);
    CHECK(a.mu == 6.0);
    CHECK(a.node == 0);
    CHECK_THROWS_AS(rate_anchor({at0, at_half}, eq, g), HypothesisViolation);
    CHECK_THROWS_AS(rate_anchor({at_half}, eq, g), HypothesisViolation);
    eq.points[0].mu_min_positive.reset();
    eq.points[0].classification = "sink";
    CHECK_THROWS_AS(rate_anchor({at0}, eq, g), HypothesisViolation);
}

TEST_CASE("rate experiment on a coarse cosine grid") {
    auto c = small("cosine", 128, 4e-3);
    c.T_rate = 1.5;
    auto rep = run_rate_experiment(c);
    const double mu = (-0.5 + std::sqrt(0.25 + 16 * kPi * kPi)) / 2;
    CHECK(rep.mu == doctest::Approx(mu).epsilon(1e-9));
    CHECK(rep.alpha == doctest::Approx(-2.0).epsilon(1e-2));
    CHECK(rep.required_slope == doctest::Approx(-0.9 * (mu + 0.5)));
    CHECK(rep.fit_samples >= 3);
    CHECK(rep.fit_lo == doctest::Approx(2.0 / (mu + 0.5)));
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        CHECK(rep.errors[i] >= 0.0);
        if (rep.times[i] >= rep.fit_lo && rep.times[i] < rep.fit_hi) CHECK(rep.errors[i] >= 10 * rep.floor);
    }
    CHECK(rep.slope_ok());
    CHECK(rep.crude_ok());
    auto csv = rep.to_csv();
    CHECK(csv.rfind("t,e_t,e_crude\n", 0) == 0);
    // independent least-squares fit over the reported window
    double st = 0, sl = 0, stt = 0, stl = 0;
    int k = 0;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        if (rep.times[i] >= rep.fit_lo && rep.times[i] < rep.fit_hi) {
            double t = rep.times[i], l = std::log(rep.errors[i]);
            st += t, sl += l, stt += t * t, stl += t * l, ++k;
        }
    CHECK(k == int(rep.fit_samples));
    CHECK(rep.fitted_slope == doctest::Approx((k * stl - st * sl) / (k * stt - st * st)).epsilon(1e-9));
}

TEST_CASE("floor domination is reported") {
    auto c = small("cosine", 32, 1e-2);
    c.T_rate = 1.0;
    c.rate_stride = 0.5;
    CHECK_THROWS_AS(run_rate_experiment(c), FloorDominates);
}

TEST_CASE("degenerate presets violate the rate hypothesis") {
    CHECK_THROWS_AS(run_rate_experiment(small("constant", 32, 1e-2)), HypothesisViolation);
}

TEST_CASE("free preset suite passes and records the rate skip") {
    auto c = small("free", 32, 1e-2);
    c.output_dir = scratch_dir("free");
    auto r = run_suite(c);
    CHECK(r.passed());
    CHECK(r.exit_status() == 0);
    REQUIRE(r.find("rate_slope"));
    CHECK(r.find("rate_slope")->status == ContractStatus::Skip);
    CHECK(r.find("rate_crude")->status == ContractStatus::Pass);
    for (const char *f : {"u_minus.csv", "u_reg.csv", "residual.csv", "aubry.json", "equilibria.json",
                          "sigma_cloud.csv", "attractor_cloud.csv", "rate.csv", "report.json"})
        CHECK(fs::exists(fs::path(c.output_dir) / f));
    auto report = nlohmann::json::parse(read_text_file(c.output_dir + "/report.json"));
    CHECK(report["passed"] == true);
    CHECK(report["config"]["model"]["preset"] == "free");
    CHECK(report["contracts"].size() == r.contracts.size());
    CHECK(report.dump().find("wall_time") == std::string::npos);
}

TEST_CASE("cosine suite on a coarse grid is byte-for-byte reproducible") {
    auto c = small("cosine", 64, 1e-2);
    const auto dir_a = scratch_dir("cos_a"), dir_b = scratch_dir("cos_b");
    c.output_dir = dir_a;
    auto a = run_suite(c, StageSolve | StageRegularize | StageAubry | StageAttractor);
    c.output_dir = dir_b;
    auto b = run_suite(c, StageSolve | StageRegularize | StageAubry | StageAttractor);
    REQUIRE(a.artifacts == b.artifacts);
    for (const auto &f : a.artifacts) {
        if (f == "report.json") continue; // embeds the output directory
        CHECK(read_text_file(dir_a + "/" + f) == read_text_file(dir_b + "/" + f));
    }
    CHECK(a.find("attractor_contains_equilibria")->status == ContractStatus::Pass);
    CHECK(a.find("aubry_dirac_residual")->status == ContractStatus::Pass);
    CHECK(a.find("order_regularized")->status == ContractStatus::Pass);
}

TEST_CASE("invalid configs fail before any computation") {
    auto c = small("free", 32, 1e-2);
    c.semigroup.dt = 0.0;
    c.output_dir = scratch_dir("broken");
    CHECK_THROWS_AS(run_suite(c), ConfigError);
    CHECK_FALSE(fs::exists(c.output_dir));
    c.semigroup.dt = 1e-2;
    CHECK_THROWS_AS(run_suite(c, StageRegularize), InvalidArgument);
}

TEST_CASE("stage errors are recorded and later stages still run") {
    auto c = small("cosine", 32, 1e-2);
    c.max_iters = 3; // solve cannot converge
    c.output_dir = scratch_dir("noconv");
    auto r = run_suite(c);
    CHECK_FALSE(r.passed());
    REQUIRE(r.find("solve_completed"));
    CHECK(r.find("solve_completed")->status == ContractStatus::Fail);
    CHECK(r.find("solve_completed")->detail.find("NotConverged") != std::string::npos);
    CHECK(r.find("rate_completed")->status == ContractStatus::Skip);
    CHECK(fs::exists(fs::path(c.output_dir) / "report.json"));
}
