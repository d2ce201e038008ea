#include "dhj/dhj.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "dhj/config.hpp"
#include "dhj/error.hpp"
#include "dhj/experiment.hpp"
#include "dhj/grid.hpp"
#include "dhj/semigroup.hpp"

struct dhj_config {
    dhj::ExperimentConfig cfg;
};

struct dhj_field {
    dhj::GridFunction f;
};

struct dhj_result {
    dhj::SuiteResult r;
};

struct dhj_rate {
    dhj::RateReport r;
};

namespace {

thread_local std::string last_error;

dhj_status fail(dhj_status s, const char *msg) {
    last_error = msg;
    return s;
}

template <class F>
dhj_status guard(F &&body) {
    try {
        body();
        last_error.clear();
        return DHJ_OK;
    } catch (const dhj::Error &e) {
        return fail(static_cast<dhj_status>(e.code()), e.what());
    } catch (const std::bad_alloc &) {
        return fail(DHJ_ERR_INTERNAL, "out of memory");
    } catch (const std::exception &e) {
        return fail(DHJ_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DHJ_ERR_INTERNAL, "unknown error");
    }
}

#define DHJ_REQUIRE(cond, what)                                                                    \
    do {                                                                                           \
        if (!(cond)) return fail(DHJ_ERR_INVALID_ARGUMENT, what);                                  \
    } while (0)

char *dup_string(const std::string &s) {
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

dhj_status set_value(dhj_config *cfg, const char *table, const char *key, dhj::TomlValue v) {
    DHJ_REQUIRE(cfg && table && key, "null argument");
    return guard([&] {
        auto doc = cfg->cfg.to_toml();
        doc.set(table, key, std::move(v));
        cfg->cfg = dhj::ExperimentConfig::from_toml(doc);
    });
}

} // namespace

extern "C" {

const char *dhj_last_error(void) { return last_error.c_str(); }

const char *dhj_status_name(dhj_status status) {
    if (status == DHJ_OK) return "Ok";
    if (status == DHJ_ERR_INTERNAL) return "Internal";
    if (status >= DHJ_ERR_INVALID_ARGUMENT && status <= DHJ_ERR_FLOOR_DOMINATES)
        return dhj::error_code_name(static_cast<dhj::ErrorCode>(status));
    return "Unknown";
}

const char *dhj_version(void) { return "0.1.0"; }

void dhj_string_free(char *s) { std::free(s); }

dhj_status dhj_config_default(dhj_config **out) {
    DHJ_REQUIRE(out, "null argument");
    return guard([&] { *out = new dhj_config{}; });
}

dhj_status dhj_config_load(const char *path, dhj_config **out) {
    DHJ_REQUIRE(path && out, "null argument");
    return guard([&] { *out = new dhj_config{dhj::ExperimentConfig::load(path)}; });
}

dhj_status dhj_config_parse(const char *toml_text, dhj_config **out) {
    DHJ_REQUIRE(toml_text && out, "null argument");
    return guard([&] { *out = new dhj_config{dhj::ExperimentConfig::from_text(toml_text)}; });
}

dhj_status dhj_config_clone(const dhj_config *cfg, dhj_config **out) {
    DHJ_REQUIRE(cfg && out, "null argument");
    return guard([&] { *out = new dhj_config{cfg->cfg}; });
}

void dhj_config_free(dhj_config *cfg) { delete cfg; }

dhj_status dhj_config_set_double(dhj_config *cfg, const char *table, const char *key, double value) {
    return set_value(cfg, table, key, value);
}

dhj_status dhj_config_set_int(dhj_config *cfg, const char *table, const char *key, long long value) {
    return set_value(cfg, table, key, static_cast<std::int64_t>(value));
}

dhj_status dhj_config_set_string(dhj_config *cfg, const char *table, const char *key, const char *value) {
    DHJ_REQUIRE(value, "null argument");
    return set_value(cfg, table, key, std::string(value));
}

dhj_status dhj_config_to_toml(const dhj_config *cfg, char **out) {
    DHJ_REQUIRE(cfg && out, "null argument");
    return guard([&] { *out = dup_string(cfg->cfg.to_toml().serialize()); });
}

dhj_status dhj_config_validate(const dhj_config *cfg) {
    DHJ_REQUIRE(cfg, "null argument");
    return guard([&] { cfg->cfg.validate(); });
}

dhj_status dhj_solve(const dhj_config *cfg, dhj_field **out) {
    DHJ_REQUIRE(cfg && out, "null argument");
    return guard([&] {
        const auto &c = cfg->cfg;
        c.validate();
        dhj::PeriodicGrid grid(c.dim, c.n);
        auto sol = dhj::solve_stationary(dhj::GridFunction::constant(grid, 0.0), c.semigroup, c.model(), c.solve_tol,
                                         c.max_iters);
        *out = new dhj_field{std::move(sol.u)};
    });
}

dhj_status dhj_evolve(const dhj_config *cfg, const dhj_field *f, double t, int direction, dhj_field **out) {
    DHJ_REQUIRE(cfg && f && out, "null argument");
    DHJ_REQUIRE(direction == 1 || direction == -1, "direction must be -1 or +1");
    return guard([&] {
        const auto &c = cfg->cfg;
        c.validate();
        auto dir = direction < 0 ? dhj::Direction::Backward : dhj::Direction::Forward;
        *out = new dhj_field{dhj::evolve(f->f, t, c.semigroup, c.model(), dir)};
    });
}

dhj_status dhj_field_from_values(int dim, int n, const double *values, dhj_field **out) {
    DHJ_REQUIRE(values && out, "null argument");
    return guard([&] {
        dhj::PeriodicGrid grid(dim, n);
        std::vector<double> v(values, values + grid.size());
        *out = new dhj_field{dhj::GridFunction(grid, std::move(v))};
    });
}

dhj_status dhj_field_read_csv(const char *path, dhj_field **out) {
    DHJ_REQUIRE(path && out, "null argument");
    return guard([&] { *out = new dhj_field{dhj::read_csv(path)}; });
}

dhj_status dhj_field_write_csv(const dhj_field *f, const char *path) {
    DHJ_REQUIRE(f && path, "null argument");
    return guard([&] { dhj::write_csv(f->f, path); });
}

void dhj_field_free(dhj_field *f) { delete f; }

int dhj_field_dim(const dhj_field *f) { return f ? f->f.grid().dim() : 0; }

int dhj_field_n(const dhj_field *f) { return f ? f->f.grid().n() : 0; }

size_t dhj_field_size(const dhj_field *f) { return f ? f->f.size() : 0; }

const double *dhj_field_values(const dhj_field *f) { return f ? f->f.values().data() : nullptr; }

dhj_status dhj_field_eval(const dhj_field *f, const double *x, double *value) {
    DHJ_REQUIRE(f && x && value, "null argument");
    return guard([&] {
        dhj::Vec p{};
        for (int k = 0; k < f->f.grid().dim(); ++k) p[k] = x[k];
        *value = dhj::interpolate(f->f, p);
    });
}

dhj_status dhj_run_stages(const dhj_config *cfg, unsigned stages, dhj_log_fn log, void *user, dhj_result **out) {
    DHJ_REQUIRE(cfg && out, "null argument");
    return guard([&] {
        std::function<void(const std::string &)> sink;
        if (log) sink = [log, user](const std::string &line) { log(line.c_str(), user); };
        *out = new dhj_result{dhj::run_suite(cfg->cfg, stages, sink)};
    });
}

dhj_status dhj_stages_for_command(const char *command, unsigned *stages) {
    DHJ_REQUIRE(command && stages, "null argument");
    return guard([&] { *stages = dhj::stages_for_command(command); });
}

void dhj_result_free(dhj_result *r) { delete r; }

int dhj_result_passed(const dhj_result *r) { return r && r->r.passed() ? 1 : 0; }

size_t dhj_result_contract_count(const dhj_result *r) { return r ? r->r.contracts.size() : 0; }

dhj_status dhj_result_contract(const dhj_result *r, size_t i, const char **name, dhj_contract_status *status,
                               double *measured, double *threshold, const char **detail) {
    DHJ_REQUIRE(r, "null argument");
    DHJ_REQUIRE(i < r->r.contracts.size(), "contract index out of range");
    const auto &c = r->r.contracts[i];
    if (name) *name = c.name.c_str();
    if (status) *status = static_cast<dhj_contract_status>(c.status);
    if (measured) *measured = c.measured;
    if (threshold) *threshold = c.threshold;
    if (detail) *detail = c.detail.c_str();
    last_error.clear();
    return DHJ_OK;
}

const char *dhj_result_report_json(const dhj_result *r) { return r ? r->r.report_json.c_str() : ""; }

dhj_status dhj_rate_run(const dhj_config *cfg, dhj_rate **out) {
    DHJ_REQUIRE(cfg && out, "null argument");
    return guard([&] { *out = new dhj_rate{dhj::run_rate_experiment(cfg->cfg)}; });
}

void dhj_rate_free(dhj_rate *r) { delete r; }

double dhj_rate_fitted_slope(const dhj_rate *r) { return r ? r->r.fitted_slope : 0.0; }
double dhj_rate_required_slope(const dhj_rate *r) { return r ? r->r.required_slope : 0.0; }
double dhj_rate_alpha(const dhj_rate *r) { return r ? r->r.alpha : 0.0; }
double dhj_rate_mu(const dhj_rate *r) { return r ? r->r.mu : 0.0; }
double dhj_rate_floor(const dhj_rate *r) { return r ? r->r.floor : 0.0; }

} // extern "C"
