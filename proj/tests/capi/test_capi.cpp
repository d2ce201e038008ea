#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "dhj/dhj.h"

namespace fs = std::filesystem;

namespace {
dhj_config *small_free(const std::string &dir) {
    dhj_config *c = nullptr;
    REQUIRE(dhj_config_parse("[model]\npreset = \"free\"\nlambda = 1.0\n[grid]\nn = 32\n[semigroup]\ndt = 0.01\n", &c) ==
            DHJ_OK);
    REQUIRE(dhj_config_set_string(c, "output", "dir", dir.c_str()) == DHJ_OK);
    REQUIRE(dhj_config_set_int(c, "flow", "p_samples", 33) == DHJ_OK);
    REQUIRE(dhj_config_set_int(c, "flow", "lyapunov_trajectories", 10) == DHJ_OK);
    REQUIRE(dhj_config_set_double(c, "flow", "t_lyapunov", 1.0) == DHJ_OK);
    REQUIRE(dhj_config_set_double(c, "rate", "t_rate", 1.0) == DHJ_OK);
    REQUIRE(dhj_config_set_double(c, "rate", "stride", 0.02) == DHJ_OK);
    return c;
}

void collect(const char *line, void *user) { static_cast<std::vector<std::string> *>(user)->push_back(line); }
} // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(dhj_version()) == "0.1.0");
    CHECK(std::string(dhj_status_name(DHJ_OK)) == "Ok");
    CHECK(std::string(dhj_status_name(DHJ_ERR_CONFIG)) == "ConfigError");
    CHECK(std::string(dhj_status_name(DHJ_ERR_FLOOR_DOMINATES)) == "FloorDominates");
}

TEST_CASE("config handles and error reporting") {
    dhj_config *c = nullptr;
    REQUIRE(dhj_config_default(&c) == DHJ_OK);
    CHECK(dhj_config_validate(c) == DHJ_OK);

    CHECK(dhj_config_set_double(c, "semigroup", "dt", 0.0) == DHJ_ERR_CONFIG);
    CHECK(std::string(dhj_last_error()).find("dt") != std::string::npos);
    // failed setters leave the config untouched
    char *text = nullptr;
    REQUIRE(dhj_config_to_toml(c, &text) == DHJ_OK);
    CHECK(std::string(text).find("dt = 0.001") != std::string::npos);
    dhj_string_free(text);

    CHECK(dhj_config_set_int(c, "grid", "n", 128) == DHJ_OK);
    dhj_config *copy = nullptr;
    REQUIRE(dhj_config_clone(c, &copy) == DHJ_OK);
    CHECK(dhj_config_set_int(c, "grid", "n", 64) == DHJ_OK);
    REQUIRE(dhj_config_to_toml(copy, &text) == DHJ_OK);
    CHECK(std::string(text).find("n = 128") != std::string::npos);
    dhj_string_free(text);
    dhj_config_free(copy);
    dhj_config_free(c);

    CHECK(dhj_config_parse("a = [1]", &c) == DHJ_ERR_CONFIG);
    CHECK(dhj_config_load("/nonexistent.toml", &c) == DHJ_ERR_IO);
    CHECK(dhj_config_default(nullptr) == DHJ_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(dhj_last_error()) > 0);
    dhj_config_free(nullptr);
    dhj_field_free(nullptr);
    dhj_result_free(nullptr);
    dhj_rate_free(nullptr);
}

TEST_CASE("fields from values and evaluation") {
    std::vector<double> v(16);
    for (int i = 0; i < 16; ++i) v[i] = i / 16.0;
    dhj_field *f = nullptr;
    REQUIRE(dhj_field_from_values(1, 16, v.data(), &f) == DHJ_OK);
    CHECK(dhj_field_dim(f) == 1);
    CHECK(dhj_field_n(f) == 16);
    CHECK(dhj_field_size(f) == 16);
    CHECK(dhj_field_values(f)[3] == 3.0 / 16);
    double x[2] = {3.0 / 16, 0.0}, out = 0.0;
    REQUIRE(dhj_field_eval(f, x, &out) == DHJ_OK);
    CHECK(out == doctest::Approx(3.0 / 16));
    CHECK(dhj_field_eval(f, nullptr, &out) == DHJ_ERR_INVALID_ARGUMENT);

    auto path = (fs::temp_directory_path() / "dhj_capi_field.csv").string();
    REQUIRE(dhj_field_write_csv(f, path.c_str()) == DHJ_OK);
    dhj_field *g = nullptr;
    REQUIRE(dhj_field_read_csv(path.c_str(), &g) == DHJ_OK);
    for (int i = 0; i < 16; ++i) CHECK(dhj_field_values(g)[i] == v[i]);
    dhj_field_free(g);
    dhj_field_free(f);
    CHECK(dhj_field_from_values(1, 0, v.data(), &f) != DHJ_OK);
}

TEST_CASE("solve and evolve through the C interface") {
    dhj_config *c = nullptr;
    REQUIRE(dhj_config_parse("[model]\npreset = \"constant\"\nlambda = 0.5\n[grid]\nn = 32\n[semigroup]\ndt = 0.01\n",
                             &c) == DHJ_OK);
    dhj_field *u = nullptr;
    REQUIRE(dhj_solve(c, &u) == DHJ_OK);
    // fixed point of the discrete scheme for a constant potential
    const double dt = 0.01, lam = 0.5, fp = -dt * std::exp(-lam * dt / 2) / (1 - std::exp(-lam * dt));
    for (size_t i = 0; i < dhj_field_size(u); ++i) CHECK(dhj_field_values(u)[i] == doctest::Approx(fp).epsilon(1e-6));
    dhj_field *w = nullptr;
    REQUIRE(dhj_evolve(c, u, 0.1, +1, &w) == DHJ_OK);
    CHECK(dhj_field_values(w)[0] == doctest::Approx(fp).epsilon(1e-6));
    dhj_field_free(w);
    CHECK(dhj_evolve(c, u, 0.1, 0, &w) == DHJ_ERR_INVALID_ARGUMENT);
    dhj_field_free(u);
    dhj_config_free(c);
}

TEST_CASE("stage runs and contract iteration") {
    unsigned stages = 0;
    REQUIRE(dhj_stages_for_command("check", &stages) == DHJ_OK);
    CHECK(stages == DHJ_STAGE_ALL);
    CHECK(dhj_stages_for_command("nope", &stages) == DHJ_ERR_INVALID_ARGUMENT);

    auto dir = (fs::temp_directory_path() / "dhj_capi_free").string();
    fs::remove_all(dir);
    dhj_config *c = small_free(dir);
    std::vector<std::string> log;
    dhj_result *r = nullptr;
    REQUIRE(dhj_run_stages(c, DHJ_STAGE_ALL, collect, &log, &r) == DHJ_OK);
    CHECK_FALSE(log.empty());
    CHECK(dhj_result_passed(r) == 1);
    size_t n = dhj_result_contract_count(r);
    CHECK(n > 5);
    bool saw_stationary = false;
    for (size_t i = 0; i < n; ++i) {
        const char *name = nullptr, *detail = nullptr;
        dhj_contract_status st;
        double measured = 0, threshold = 0;
        REQUIRE(dhj_result_contract(r, i, &name, &st, &measured, &threshold, &detail) == DHJ_OK);
        CHECK(st != DHJ_CONTRACT_FAIL);
        saw_stationary |= std::string(name) == "stationary_converged";
    }
    CHECK(saw_stationary);
    CHECK(dhj_result_contract(r, n, nullptr, nullptr, nullptr, nullptr, nullptr) == DHJ_ERR_INVALID_ARGUMENT);
    CHECK(std::string(dhj_result_report_json(r)).find("\"passed\": true") != std::string::npos);
    CHECK(fs::exists(fs::path(dir) / "report.json"));
    dhj_result_free(r);

    // the free preset has a continuum of equilibria, so the rate hypothesis fails
    dhj_rate *rate = nullptr;
    CHECK(dhj_rate_run(c, &rate) == DHJ_ERR_HYPOTHESIS_VIOLATION);
    dhj_config_free(c);
}
