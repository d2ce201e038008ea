#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dhj/aubry.hpp"
#include "dhj/model.hpp"
#include "dhj/semigroup.hpp"

namespace dhj {

/// Scalar of the accepted TOML subset.
using TomlValue = std::variant<bool, std::int64_t, double, std::string>;

/// Tables of key/value pairs in file order. Root keys live in the table "".
/// Accepted syntax: comments, `[table]` headers, `key = value` with basic or
/// literal strings, integers, floats and booleans. Arrays and inline tables
/// are rejected.
class TomlDocument {
  public:
    using Entries = std::vector<std::pair<std::string, TomlValue>>;

    static TomlDocument parse(const std::string &text);
    std::string serialize() const;

    const TomlValue *find(const std::string &table, const std::string &key) const;
    void set(const std::string &table, const std::string &key, TomlValue value);
    const std::vector<std::pair<std::string, Entries>> &tables() const noexcept { return tables_; }

    bool operator==(const TomlDocument &o) const { return tables_ == o.tables_; }

  private:
    std::vector<std::pair<std::string, Entries>> tables_;
};

/// serialize(parse(text)).
std::string normalize_toml(const std::string &text);

struct Tolerances {
    double tol_sub = 5e-3;       // residual of regularized fields
    double tol_dom = 1e-3;       // domination / calibration defects
    double tol_aubry = 1e-3;     // |w - u_minus| on Aubry candidates
    double tol_lyap = 1e-3;      // Gronwall margin
    double tol_semigroup = 5e-3; // semigroup law and crude rate slack
    double tol_order = 5e-3;     // u <= u_minus + tol_order
    double tol_measure = 2e-3;   // |int (L - lambda u) dmu| at Aubry Diracs
    double tol_strict = 2e-3;    // s + V_bump / 2 outside the Aubry neighbourhood
    double tol_volume = 1e-6;    // |det DPhi - e^{-dim lambda T}|
    double cells_attractor = 2.0;
    double cells_invariance = 1.0;
};

struct ExperimentConfig {
    // model
    std::string preset = "cosine"; // free | constant | cosine | two-well | shifted
    int dim = 1;
    double amplitude = 1.0;
    double constant = 1.0; // potential value for the constant preset
    Vec shift{};           // momentum shift for the shifted preset
    double lambda = 0.5;
    double p_bound = 0.0; // 0 selects the preset default
    double v_bound = 0.0;

    // grid and semigroup
    int n = 512;
    SemigroupConfig semigroup{};
    double solve_tol = 1e-7;
    int max_iters = 400000;

    // regularization
    double reg_t = 0.1;
    double reg_s = 0.1;
    RegularityPolicy regularity{};

    // aubry
    AubryOptions aubry{};
    double bump_height = 1e-2;
    double bump_radius = 0.1;
    double aubry_neighborhood = 0.05;

    // flow
    double flow_dt = 1e-3;
    int p_samples = 257;
    double sublevel_slack = 1e-5;
    double T_attractor = 10.0;
    double T_invariance = 1.0;
    double T_volume = 1.0;
    int seeds_per_axis = 16;
    double manifold_eps = 1e-9;
    double manifold_T = 60.0;
    double manifold_dt = 2.5e-4;
    int lyapunov_trajectories = 100;
    double T_lyapunov = 5.0;
    double lyapunov_p_range = 2.0;

    // rate experiment
    double T_rate = 3.0;
    double rate_stride = 0.01;

    Tolerances tol{};
    std::string output_dir = "out";
    std::uint64_t seed = 12345;

    /// Throws ConfigError on any inconsistent value.
    void validate() const;

    MechanicalPreset preset_data() const;
    Model model() const;

    static ExperimentConfig from_toml(const TomlDocument &doc);
    static ExperimentConfig from_text(const std::string &text);
    static ExperimentConfig load(const std::string &path);
    TomlDocument to_toml() const;
};

} // namespace dhj
