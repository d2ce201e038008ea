#include "dhj/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "dhj/error.hpp"
#include "dhj/io.hpp"

namespace dhj {

namespace {

[[noreturn]] void fail_at(int line, const std::string &msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string &s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

// Removes a trailing comment, honouring quotes.
std::string strip_comment(const std::string &line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (quote == '"' && c == '\\') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

// Parses a quoted string starting at s[pos]; advances pos past the closing quote.
std::string parse_quoted(const std::string &s, std::size_t &pos, int line) {
    const char q = s[pos++];
    std::string out;
    while (pos < s.size() && s[pos] != q) {
        char c = s[pos++];
        if (q == '"' && c == '\\') {
            if (pos >= s.size()) fail_at(line, "unterminated escape");
            char e = s[pos++];
            switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'u': {
                if (pos + 4 > s.size()) fail_at(line, "short \\u escape");
                unsigned code = std::stoul(s.substr(pos, 4), nullptr, 16);
                pos += 4;
                if (code > 0x7f) fail_at(line, "only ASCII \\u escapes are supported");
                out += static_cast<char>(code);
                break;
            }
            default: fail_at(line, std::string("unknown escape \\") + e);
            }
        } else {
            out += c;
        }
    }
    if (pos >= s.size()) fail_at(line, "unterminated string");
    ++pos;
    return out;
}

TomlValue parse_value(const std::string &raw, int line) {
    const std::string v = trim(raw);
    if (v.empty()) fail_at(line, "missing value");
    if (v[0] == '"' || v[0] == '\'') {
        std::size_t pos = 0;
        std::string s = parse_quoted(v, pos, line);
        if (!trim(v.substr(pos)).empty()) fail_at(line, "trailing characters after string");
        return s;
    }
    if (v[0] == '[' || v[0] == '{') fail_at(line, "arrays and inline tables are not supported");
    if (v == "true") return true;
    if (v == "false") return false;
    std::string num;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '_') {
            if (i == 0 || i + 1 == v.size() || !std::isdigit(static_cast<unsigned char>(v[i - 1])) ||
                !std::isdigit(static_cast<unsigned char>(v[i + 1])))
                fail_at(line, "misplaced underscore in number '" + v + "'");
            continue;
        }
        num += v[i];
    }
    std::string body = (num[0] == '+' || num[0] == '-') ? num.substr(1) : num;
    if (body == "inf" || body == "nan") {
        double x = body == "inf" ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
        return num[0] == '-' ? -x : x;
    }
    const bool is_float = num.find_first_of(".eE") != std::string::npos;
    const char *first = num.data() + (num[0] == '+' ? 1 : 0);
    const char *last = num.data() + num.size();
    if (is_float) {
        double x = 0.0;
        auto r = std::from_chars(first, last, x);
        if (r.ec != std::errc() || r.ptr != last) fail_at(line, "invalid number '" + v + "'");
        return x;
    }
    std::int64_t x = 0;
    auto r = std::from_chars(first, last, x);
    if (r.ec != std::errc() || r.ptr != last) fail_at(line, "invalid value '" + v + "'");
    return x;
}

std::string format_value(const TomlValue &v) {
    if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (auto d = std::get_if<double>(&v)) {
        if (std::isnan(*d)) return "nan";
        if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, *d);
        std::string s(buf, r.ptr);
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        return s;
    }
    const auto &s = std::get<std::string>(v);
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

std::string format_key(const std::string &k) {
    bool bare = !k.empty() && std::all_of(k.begin(), k.end(), bare_key_char);
    return bare ? k : format_value(k);
}

} // namespace

TomlDocument TomlDocument::parse(const std::string &text) {
    TomlDocument doc;
    std::string table;
    std::vector<std::string> seen_tables;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s[0] == '[') {
            if (s.size() > 1 && s[1] == '[') fail_at(line, "arrays of tables are not supported");
            if (s.back() != ']') fail_at(line, "malformed table header");
            std::string name = trim(s.substr(1, s.size() - 2));
            if (name.empty()) fail_at(line, "empty table name");
            for (char c : name)
                if (!bare_key_char(c) && c != '.') fail_at(line, "unsupported table name '" + name + "'");
            if (std::find(seen_tables.begin(), seen_tables.end(), name) != seen_tables.end())
                fail_at(line, "table [" + name + "] defined twice");
            seen_tables.push_back(name);
            table = name;
            continue;
        }
        std::size_t pos = 0;
        std::string key;
        if (s[0] == '"' || s[0] == '\'') {
            key = parse_quoted(s, pos, line);
        } else {
            while (pos < s.size() && bare_key_char(s[pos])) ++pos;
            key = s.substr(0, pos);
            if (key.empty()) fail_at(line, "expected a key");
        }
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos >= s.size() || s[pos] != '=') fail_at(line, "expected '=' after key '" + key + "'");
        TomlValue value = parse_value(s.substr(pos + 1), line);
        if (doc.find(table, key)) fail_at(line, "duplicate key '" + key + "'");
        doc.set(table, key, std::move(value));
    }
    return doc;
}

std::string TomlDocument::serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto &[name, entries] : tables_) {
        if (!name.empty()) {
            if (!first) os << '\n';
            os << '[' << name << "]\n";
        }
        for (const auto &[k, v] : entries) os << format_key(k) << " = " << format_value(v) << '\n';
        first = false;
    }
    return os.str();
}

const TomlValue *TomlDocument::find(const std::string &table, const std::string &key) const {
    for (const auto &[name, entries] : tables_) {
        if (name != table) continue;
        for (const auto &[k, v] : entries)
            if (k == key) return &v;
    }
    return nullptr;
}

void TomlDocument::set(const std::string &table, const std::string &key, TomlValue value) {
    auto it = std::find_if(tables_.begin(), tables_.end(), [&](const auto &t) { return t.first == table; });
    if (it == tables_.end()) {
        // Root keys always serialize first.
        if (table.empty()) it = tables_.insert(tables_.begin(), {table, {}});
        else it = tables_.insert(tables_.end(), {table, {}});
    }
    for (auto &[k, v] : it->second)
        if (k == key) {
            v = std::move(value);
            return;
        }
    it->second.emplace_back(key, std::move(value));
}

std::string normalize_toml(const std::string &text) { return TomlDocument::parse(text).serialize(); }

// ---------------------------------------------------------------------------
// ExperimentConfig <-> TOML

namespace {

struct Field {
    const char *table;
    const char *key;
    std::function<TomlValue(ExperimentConfig)> get;
    std::function<void(ExperimentConfig &, const TomlValue &)> set;
};

std::string where(const char *table, const char *key) { return std::string(table) + "." + key; }

double as_double(const TomlValue &v, const char *table, const char *key) {
    if (auto d = std::get_if<double>(&v)) return *d;
    if (auto i = std::get_if<std::int64_t>(&v)) return double(*i);
    throw ConfigError(where(table, key) + " must be a number");
}

std::int64_t as_int(const TomlValue &v, const char *table, const char *key) {
    if (auto i = std::get_if<std::int64_t>(&v)) return *i;
    throw ConfigError(where(table, key) + " must be an integer");
}

std::string as_string(const TomlValue &v, const char *table, const char *key) {
    if (auto s = std::get_if<std::string>(&v)) return *s;
    throw ConfigError(where(table, key) + " must be a string");
}

template <class Acc>
Field real(const char *t, const char *k, Acc acc) {
    return {t, k, [acc](ExperimentConfig c) -> TomlValue { return double(acc(c)); },
            [acc, t, k](ExperimentConfig &c, const TomlValue &v) { acc(c) = as_double(v, t, k); }};
}

template <class Acc>
Field integer(const char *t, const char *k, Acc acc) {
    return {t, k, [acc](ExperimentConfig c) -> TomlValue { return std::int64_t(acc(c)); },
            [acc, t, k](ExperimentConfig &c, const TomlValue &v) {
                auto x = as_int(v, t, k);
                using T = std::remove_reference_t<decltype(acc(c))>;
                if (x < std::int64_t(std::numeric_limits<T>::min()) || x > std::int64_t(std::numeric_limits<T>::max()))
                    throw ConfigError(where(t, k) + " is out of range");
                acc(c) = static_cast<T>(x);
            }};
}

template <class Acc>
Field text(const char *t, const char *k, Acc acc) {
    return {t, k, [acc](ExperimentConfig c) -> TomlValue { return std::string(acc(c)); },
            [acc, t, k](ExperimentConfig &c, const TomlValue &v) { acc(c) = as_string(v, t, k); }};
}

const std::vector<Field> &fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> f = {
        text("model", "preset", [](C &c) -> auto & { return c.preset; }),
        integer("model", "dim", [](C &c) -> auto & { return c.dim; }),
        real("model", "amplitude", [](C &c) -> auto & { return c.amplitude; }),
        real("model", "constant", [](C &c) -> auto & { return c.constant; }),
        real("model", "shift_x", [](C &c) -> auto & { return c.shift[0]; }),
        real("model", "shift_y", [](C &c) -> auto & { return c.shift[1]; }),
        real("model", "lambda", [](C &c) -> auto & { return c.lambda; }),
        real("model", "p_bound", [](C &c) -> auto & { return c.p_bound; }),
        real("model", "v_bound", [](C &c) -> auto & { return c.v_bound; }),
        integer("grid", "n", [](C &c) -> auto & { return c.n; }),
        real("semigroup", "dt", [](C &c) -> auto & { return c.semigroup.dt; }),
        integer("semigroup", "v_grid", [](C &c) -> auto & { return c.semigroup.v_grid; }),
        real("semigroup", "refine_tol", [](C &c) -> auto & { return c.semigroup.refine_tol; }),
        Field{"semigroup", "scheme",
              [](C c) -> TomlValue { return std::string(interp_name(c.semigroup.scheme)); },
              [](C &c, const TomlValue &v) {
                  try {
                      c.semigroup.scheme = parse_interp(as_string(v, "semigroup", "scheme"));
                  } catch (const InvalidArgument &e) {
                      throw ConfigError(std::string("semigroup.scheme: ") + e.what());
                  }
              }},
        integer("semigroup", "sweeps_2d", [](C &c) -> auto & { return c.semigroup.sweeps_2d; }),
        real("semigroup", "solve_tol", [](C &c) -> auto & { return c.solve_tol; }),
        integer("semigroup", "max_iters", [](C &c) -> auto & { return c.max_iters; }),
        real("regularize", "t", [](C &c) -> auto & { return c.reg_t; }),
        real("regularize", "s", [](C &c) -> auto & { return c.reg_s; }),
        real("regularize", "max_constant", [](C &c) -> auto & { return c.regularity.max_constant; }),
        real("regularize", "max_variation", [](C &c) -> auto & { return c.regularity.max_variation; }),
        real("aubry", "eps_res", [](C &c) -> auto & { return c.aubry.eps_res; }),
        real("aubry", "t_recur", [](C &c) -> auto & { return c.aubry.T_recur; }),
        real("aubry", "dt_curve", [](C &c) -> auto & { return c.aubry.dt_curve; }),
        real("aubry", "bump_height", [](C &c) -> auto & { return c.bump_height; }),
        real("aubry", "bump_radius", [](C &c) -> auto & { return c.bump_radius; }),
        real("aubry", "neighborhood", [](C &c) -> auto & { return c.aubry_neighborhood; }),
        real("flow", "dt", [](C &c) -> auto & { return c.flow_dt; }),
        integer("flow", "p_samples", [](C &c) -> auto & { return c.p_samples; }),
        real("flow", "sublevel_slack", [](C &c) -> auto & { return c.sublevel_slack; }),
        real("flow", "t_attractor", [](C &c) -> auto & { return c.T_attractor; }),
        real("flow", "t_invariance", [](C &c) -> auto & { return c.T_invariance; }),
        real("flow", "t_volume", [](C &c) -> auto & { return c.T_volume; }),
        integer("flow", "seeds_per_axis", [](C &c) -> auto & { return c.seeds_per_axis; }),
        real("flow", "manifold_eps", [](C &c) -> auto & { return c.manifold_eps; }),
        real("flow", "manifold_t", [](C &c) -> auto & { return c.manifold_T; }),
        real("flow", "manifold_dt", [](C &c) -> auto & { return c.manifold_dt; }),
        integer("flow", "lyapunov_trajectories", [](C &c) -> auto & { return c.lyapunov_trajectories; }),
        real("flow", "t_lyapunov", [](C &c) -> auto & { return c.T_lyapunov; }),
        real("flow", "lyapunov_p_range", [](C &c) -> auto & { return c.lyapunov_p_range; }),
        real("rate", "t_rate", [](C &c) -> auto & { return c.T_rate; }),
        real("rate", "stride", [](C &c) -> auto & { return c.rate_stride; }),
        real("tolerances", "tol_sub", [](C &c) -> auto & { return c.tol.tol_sub; }),
        real("tolerances", "tol_dom", [](C &c) -> auto & { return c.tol.tol_dom; }),
        real("tolerances", "tol_aubry", [](C &c) -> auto & { return c.tol.tol_aubry; }),
        real("tolerances", "tol_lyap", [](C &c) -> auto & { return c.tol.tol_lyap; }),
        real("tolerances", "tol_semigroup", [](C &c) -> auto & { return c.tol.tol_semigroup; }),
        real("tolerances", "tol_order", [](C &c) -> auto & { return c.tol.tol_order; }),
        real("tolerances", "tol_measure", [](C &c) -> auto & { return c.tol.tol_measure; }),
        real("tolerances", "tol_strict", [](C &c) -> auto & { return c.tol.tol_strict; }),
        real("tolerances", "tol_volume", [](C &c) -> auto & { return c.tol.tol_volume; }),
        real("tolerances", "cells_attractor", [](C &c) -> auto & { return c.tol.cells_attractor; }),
        real("tolerances", "cells_invariance", [](C &c) -> auto & { return c.tol.cells_invariance; }),
        text("output", "dir", [](C &c) -> auto & { return c.output_dir; }),
        Field{"output", "seed", [](C c) -> TomlValue { return std::int64_t(c.seed); },
              [](C &c, const TomlValue &v) {
                  auto x = as_int(v, "output", "seed");
                  if (x < 0) throw ConfigError("output.seed must be nonnegative");
                  c.seed = std::uint64_t(x);
              }},
    };
    return f;
}

void require(bool ok, const std::string &msg) {
    if (!ok) throw ConfigError(msg);
}

} // namespace

void ExperimentConfig::validate() const {
    require(preset == "free" || preset == "constant" || preset == "cosine" || preset == "two-well" ||
                preset == "shifted",
            "model.preset must be one of free, constant, cosine, two-well, shifted");
    require(dim == 1 || dim == 2, "model.dim must be 1 or 2");
    require(!(preset == "two-well" && dim != 1), "the two-well preset is one-dimensional");
    require(std::isfinite(amplitude) && std::isfinite(constant), "model parameters must be finite");
    require(std::isfinite(shift[0]) && std::isfinite(shift[1]), "model shift must be finite");
    require(lambda > 0.0 && std::isfinite(lambda), "model.lambda must be positive");
    require(p_bound >= 0.0 && v_bound >= 0.0, "model.p_bound and model.v_bound must be >= 0 (0 = default)");
    require(n >= 16 && n % 2 == 0, "grid.n must be even and >= 16 (the error floor uses n/2)");
    try {
        semigroup.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(std::string("semigroup: ") + e.what());
    }
    require(std::isfinite(semigroup.dt), "semigroup.dt must be finite");
    require(solve_tol > 0.0, "semigroup.solve_tol must be positive");
    require(max_iters >= 1, "semigroup.max_iters must be >= 1");
    require(reg_s > 0.0 && reg_s <= reg_t && reg_t <= 0.5, "regularize needs 0 < s <= t <= 0.5");
    require(regularity.max_constant > 0.0 && regularity.max_variation > 0.0, "regularity thresholds must be positive");
    require(aubry.eps_res > 0.0 && aubry.T_recur > 0.0 && aubry.dt_curve > 0.0, "aubry options must be positive");
    require(bump_height >= 0.0 && bump_radius > 0.0 && aubry_neighborhood >= 0.0, "invalid bump parameters");
    require(flow_dt > 0.0 && flow_dt <= 1e-2, "flow.dt must lie in (0, 1e-2]");
    require(manifold_dt > 0.0 && manifold_dt <= 1e-2, "flow.manifold_dt must lie in (0, 1e-2]");
    require(p_samples >= 3, "flow.p_samples must be >= 3");
    require(sublevel_slack >= 0.0, "flow.sublevel_slack must be >= 0");
    require(T_attractor > 0.0 && T_invariance > 0.0 && T_volume > 0.0 && T_lyapunov > 0.0 && manifold_T > 0.0,
            "flow times must be positive");
    require(manifold_eps > 0.0, "flow.manifold_eps must be positive");
    require(seeds_per_axis >= 8, "flow.seeds_per_axis must be >= 8");
    require(lyapunov_trajectories >= 1 && lyapunov_p_range > 0.0, "invalid Lyapunov sampling");
    require(T_rate >= 1.0, "rate.t_rate must be >= 1");
    require(rate_stride > 0.0 && std::lround(rate_stride / semigroup.dt) >= 1,
            "rate.stride must be at least one semigroup step");
    for (double t : {tol.tol_sub, tol.tol_dom, tol.tol_aubry, tol.tol_lyap, tol.tol_semigroup, tol.tol_order,
                     tol.tol_measure, tol.tol_strict, tol.tol_volume, tol.cells_attractor, tol.cells_invariance})
        require(t > 0.0 && std::isfinite(t), "all tolerances must be positive");
    require(!output_dir.empty(), "output.dir must not be empty");
}

MechanicalPreset ExperimentConfig::preset_data() const {
    if (preset == "free") return MechanicalPreset::free(dim);
    if (preset == "constant") return MechanicalPreset::constant(constant, dim);
    if (preset == "cosine") return MechanicalPreset::cosine(amplitude, dim);
    if (preset == "two-well") return MechanicalPreset::two_well(amplitude);
    if (preset == "shifted") return MechanicalPreset::shifted(shift, amplitude, dim);
    throw ConfigError("unknown preset '" + preset + "'");
}

Model ExperimentConfig::model() const {
    Model m = preset_data().model(lambda);
    if (p_bound > 0.0 || v_bound > 0.0) {
        auto h = p_bound > 0.0 ? m.hamiltonian.with_p_bound(p_bound) : m.hamiltonian;
        const double vb = v_bound > 0.0 ? v_bound : m.v_bound();
        const auto &lag = m.lagrangian;
        m = Model{h, LagrangianView(h, [lag](const Vec &x, const Vec &v) { return lag(x, v); }, vb)};
    }
    return m;
}

ExperimentConfig ExperimentConfig::from_toml(const TomlDocument &doc) {
    ExperimentConfig cfg;
    for (const auto &[table, entries] : doc.tables()) {
        for (const auto &[key, value] : entries) {
            auto it = std::find_if(fields().begin(), fields().end(),
                                   [&](const Field &f) { return table == f.table && key == f.key; });
            if (it == fields().end())
                throw ConfigError("unknown config key '" + (table.empty() ? key : table + "." + key) + "'");
            it->set(cfg, value);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_text(const std::string &text) { return from_toml(TomlDocument::parse(text)); }

ExperimentConfig ExperimentConfig::load(const std::string &path) { return from_text(read_text_file(path)); }

TomlDocument ExperimentConfig::to_toml() const {
    TomlDocument doc;
    for (const auto &f : fields()) doc.set(f.table, f.key, f.get(*this));
    return doc;
}

} // namespace dhj
