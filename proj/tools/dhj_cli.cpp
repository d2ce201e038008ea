#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dhj/dhj.h"

namespace {

struct ConfigDeleter {
    void operator()(dhj_config *c) const { dhj_config_free(c); }
};
struct ResultDeleter {
    void operator()(dhj_result *r) const { dhj_result_free(r); }
};

int report_error(dhj_status s) {
    std::fprintf(stderr, "error [%s]: %s\n", dhj_status_name(s), dhj_last_error());
    return 2;
}

void log_line(const char *line, void *) {
    std::fprintf(stderr, "%s\n", line);
    std::fflush(stderr);
}

const char *status_label(dhj_contract_status s) {
    switch (s) {
    case DHJ_CONTRACT_PASS: return "PASS";
    case DHJ_CONTRACT_FAIL: return "FAIL";
    default: return "SKIP";
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Discounted Hamilton-Jacobi toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<int> n;
    std::optional<double> dt, lambda;
    bool print_config = false, quiet = false;
    app.add_option("--config", config_path, "TOML config file (defaults to the built-in cosine setup)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--n", n, "grid points per axis");
    app.add_option("--dt", dt, "semigroup time step");
    app.add_option("--lambda", lambda, "discount rate");
    app.add_flag("--print-config", print_config, "print the effective config and exit");
    app.add_flag("-q,--quiet", quiet, "no progress lines");

    const char *commands[][2] = {
        {"solve", "stationary solution u_minus and its residual"},
        {"regularize", "solve, then the forward/backward regularization"},
        {"aubry", "solve, regularize and the Aubry candidate checks"},
        {"attractor", "phase-space attractor and Lyapunov checks"},
        {"rate", "convergence rate of the backward semigroup from zero"},
        {"check", "every stage and every contract"},
    };
    for (const auto &c : commands) app.add_subcommand(c[0], c[1]);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    dhj_config *raw = nullptr;
    dhj_status st = config_path.empty() ? dhj_config_default(&raw) : dhj_config_load(config_path.c_str(), &raw);
    if (st != DHJ_OK) return report_error(st);
    std::unique_ptr<dhj_config, ConfigDeleter> cfg(raw);

    if (out_dir && (st = dhj_config_set_string(cfg.get(), "output", "dir", out_dir->c_str())) != DHJ_OK)
        return report_error(st);
    if (n && (st = dhj_config_set_int(cfg.get(), "grid", "n", *n)) != DHJ_OK) return report_error(st);
    if (dt && (st = dhj_config_set_double(cfg.get(), "semigroup", "dt", *dt)) != DHJ_OK) return report_error(st);
    if (lambda && (st = dhj_config_set_double(cfg.get(), "model", "lambda", *lambda)) != DHJ_OK)
        return report_error(st);

    if (print_config) {
        char *text = nullptr;
        if ((st = dhj_config_to_toml(cfg.get(), &text)) != DHJ_OK) return report_error(st);
        std::fputs(text, stdout);
        dhj_string_free(text);
        return 0;
    }

    unsigned stages = 0;
    if ((st = dhj_stages_for_command(command.c_str(), &stages)) != DHJ_OK) return report_error(st);
    dhj_result *res_raw = nullptr;
    if ((st = dhj_run_stages(cfg.get(), stages, quiet ? nullptr : log_line, nullptr, &res_raw)) != DHJ_OK)
        return report_error(st);
    std::unique_ptr<dhj_result, ResultDeleter> res(res_raw);

    for (size_t i = 0; i < dhj_result_contract_count(res.get()); ++i) {
        const char *name = nullptr, *detail = nullptr;
        dhj_contract_status cs;
        double measured = 0.0, threshold = 0.0;
        dhj_result_contract(res.get(), i, &name, &cs, &measured, &threshold, &detail);
        std::printf("%-4s %-30s measured %-13.6g threshold %-11.6g %s\n", status_label(cs), name, measured, threshold,
                    detail);
    }
    const bool ok = dhj_result_passed(res.get());
    std::printf("%s\n", ok ? "all contracts passed" : "some contracts failed");
    return ok ? 0 : 1;
}
