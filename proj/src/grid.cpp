#include "dhj/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "dhj/error.hpp"
#include "dhj/io.hpp"

namespace dhj {

const char *interp_name(Interp scheme) {
    switch (scheme) {
    case Interp::Linear: return "linear";
    case Interp::Cubic: return "cubic";
    case Interp::ClampedCubic: return "clamped-cubic";
    }
    return "cubic";
}

Interp parse_interp(const std::string &name) {
    if (name == "linear") return Interp::Linear;
    if (name == "cubic") return Interp::Cubic;
    if (name == "clamped-cubic") return Interp::ClampedCubic;
    throw InvalidArgument("unknown interpolation scheme '" + name + "'");
}

PeriodicGrid::PeriodicGrid(int dim, int n) : dim_(dim), n_(n) {
    if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
    if (n < 8) throw InvalidArgument("grid needs n >= 8 points per axis");
}

GridFunction::GridFunction(PeriodicGrid grid, std::vector<double> values, std::string name)
    : grid_(grid), values_(std::move(values)), name_(std::move(name)) {
    if (values_.size() != grid_.size()) throw GridMismatch("value count does not match grid size");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidArgument("grid function values must be finite");
}

GridFunction GridFunction::sample(const PeriodicGrid &grid, const std::function<double(const Vec &)> &f,
                                  std::string name) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.node(i));
    return GridFunction(grid, std::move(v), std::move(name));
}

GridFunction GridFunction::constant(const PeriodicGrid &grid, double c, std::string name) {
    return GridFunction(grid, std::vector<double>(grid.size(), c), std::move(name));
}

GridFunction GridFunction::renamed(std::string name) const {
    auto copy = *this;
    copy.name_ = std::move(name);
    return copy;
}

double GridFunction::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

// ---------------------------------------------------------------------------
// Interpolation

namespace {

struct AxisStencil {
    int base;   // node index of the left cell corner
    double t;   // local coordinate in [0, 1)
};

AxisStencil locate(double x, int n) {
    double s = wrap_unit(x) * n;
    double r = std::round(s);
    if (std::abs(s - r) <= 1e-13 * std::max(1.0, r)) s = r;
    double fl = std::floor(s);
    int base = static_cast<int>(fl);
    double t = s - fl;
    if (base >= n) base -= n;
    return {base, t};
}

inline void cubic_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t + 2.0 * t2 - t3);
    w[1] = 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3);
    w[2] = 0.5 * (t + 4.0 * t2 - 3.0 * t3);
    w[3] = 0.5 * (-t2 + t3);
}

inline void cubic_dweights(double t, double w[4]) {
    const double t2 = t * t;
    w[0] = 0.5 * (-1.0 + 4.0 * t - 3.0 * t2);
    w[1] = 0.5 * (-10.0 * t + 9.0 * t2);
    w[2] = 0.5 * (1.0 + 8.0 * t - 9.0 * t2);
    w[3] = 0.5 * (-2.0 * t + 3.0 * t2);
}

inline void linear_weights(double t, double w[2]) {
    w[0] = 1.0 - t;
    w[1] = t;
}

} // namespace

double interpolate(const GridFunction &f, const Vec &x, Interp scheme) {
    const auto &g = f.grid();
    const int n = g.n();
    const auto v = f.values();
    auto ax = locate(x[0], n);
    if (g.dim() == 1) {
        if (scheme == Interp::Linear) {
            double w[2];
            linear_weights(ax.t, w);
            return w[0] * v[ax.base] + w[1] * v[g.wrap(ax.base + 1)];
        }
        double w[4];
        cubic_weights(ax.t, w);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += w[k] * v[g.wrap(ax.base - 1 + k)];
        if (scheme == Interp::ClampedCubic) {
            double lo = v[ax.base], hi = v[g.wrap(ax.base + 1)];
            if (lo > hi) std::swap(lo, hi);
            s = std::clamp(s, lo, hi);
        }
        return s;
    }
    auto ay = locate(x[1], n);
    if (scheme == Interp::Linear) {
        double wx[2], wy[2];
        linear_weights(ax.t, wx);
        linear_weights(ay.t, wy);
        double s = 0.0;
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) s += wx[a] * wy[b] * v[g.index(ax.base + a, ay.base + b)];
        return s;
    }
    double wx[4], wy[4];
    cubic_weights(ax.t, wx);
    cubic_weights(ay.t, wy);
    double s = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wx[a] * v[g.index(ax.base - 1 + a, ay.base - 1 + b)];
        s += wy[b] * row;
    }
    if (scheme == Interp::ClampedCubic) {
        double c[4] = {v[g.index(ax.base, ay.base)], v[g.index(ax.base + 1, ay.base)],
                       v[g.index(ax.base, ay.base + 1)], v[g.index(ax.base + 1, ay.base + 1)]};
        s = std::clamp(s, *std::min_element(c, c + 4), *std::max_element(c, c + 4));
    }
    return s;
}

Vec interpolate_gradient(const GridFunction &f, const Vec &x, Interp scheme) {
    const auto &g = f.grid();
    const int n = g.n();
    const auto v = f.values();
    auto ax = locate(x[0], n);
    if (g.dim() == 1) {
        if (scheme == Interp::Linear) return {(v[g.wrap(ax.base + 1)] - v[ax.base]) * n, 0.0};
        double dw[4];
        cubic_dweights(ax.t, dw);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += dw[k] * v[g.wrap(ax.base - 1 + k)];
        return {s * n, 0.0};
    }
    auto ay = locate(x[1], n);
    if (scheme == Interp::Linear) {
        double wx[2], wy[2];
        linear_weights(ax.t, wx);
        linear_weights(ay.t, wy);
        double dx = 0.0, dy = 0.0;
        for (int b = 0; b < 2; ++b) {
            double v0 = v[g.index(ax.base, ay.base + b)], v1 = v[g.index(ax.base + 1, ay.base + b)];
            dx += wy[b] * (v1 - v0);
        }
        for (int a = 0; a < 2; ++a) {
            double v0 = v[g.index(ax.base + a, ay.base)], v1 = v[g.index(ax.base + a, ay.base + 1)];
            dy += wx[a] * (v1 - v0);
        }
        return {dx * n, dy * n};
    }
    double wx[4], wy[4], dwx[4], dwy[4];
    cubic_weights(ax.t, wx);
    cubic_weights(ay.t, wy);
    cubic_dweights(ax.t, dwx);
    cubic_dweights(ay.t, dwy);
    double gx = 0.0, gy = 0.0;
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            double val = v[g.index(ax.base - 1 + a, ay.base - 1 + b)];
            gx += dwx[a] * wy[b] * val;
            gy += wx[a] * dwy[b] * val;
        }
    }
    return {gx * n, gy * n};
}

Vec gradient(const GridFunction &f, std::size_t node) {
    const auto &g = f.grid();
    auto ij = g.multi_index(node);
    const double inv2h = 0.5 * g.n();
    Vec out{};
    out[0] = (f[g.index(ij[0] + 1, ij[1])] - f[g.index(ij[0] - 1, ij[1])]) * inv2h;
    if (g.dim() == 2) out[1] = (f[g.index(ij[0], ij[1] + 1)] - f[g.index(ij[0], ij[1] - 1)]) * inv2h;
    return out;
}

SecondDifferenceConstants second_difference_constants(const GridFunction &f,
                                                      const std::vector<int> &scales) {
    if (scales.empty()) throw InvalidArgument("second-difference scales must be nonempty");
    const auto &g = f.grid();
    SecondDifferenceConstants out;
    out.scales = scales;
    out.concave = -std::numeric_limits<double>::infinity();
    out.convex = -std::numeric_limits<double>::infinity();
    for (int m : scales) {
        if (m < 1 || 4 * m >= g.n()) throw InvalidArgument("each scale must satisfy 1 <= m and m*h < 1/4");
        const double step = m * g.h();
        double cc = -std::numeric_limits<double>::infinity();
        double cv = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto ij = g.multi_index(k);
            for (int axis = 0; axis < g.dim(); ++axis) {
                int di = axis == 0 ? m : 0, dj = axis == 1 ? m : 0;
                double q = (f[g.index(ij[0] + di, ij[1] + dj)] + f[g.index(ij[0] - di, ij[1] - dj)] -
                            2.0 * f[k]) /
                           (step * step);
                cc = std::max(cc, q);
                cv = std::max(cv, -q);
            }
        }
        out.concave_per_scale.push_back(cc);
        out.convex_per_scale.push_back(cv);
        out.concave = std::max(out.concave, cc);
        out.convex = std::max(out.convex, cv);
    }
    return out;
}

double scale_variation(const std::vector<double> &per_scale, double floor) {
    if (per_scale.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(per_scale.begin(), per_scale.end());
    const double denom = std::max(*hi, floor);
    if (denom <= 0.0) return 0.0;
    return (*hi - *lo) / denom;
}

double sup_distance(const GridFunction &f, const GridFunction &g) {
    if (!(f.grid() == g.grid())) throw GridMismatch("sup_distance on different grids");
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] - g[i]));
    return m;
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const GridFunction &f) {
    const auto &g = f.grid();
    nlohmann::ordered_json header;
    header["dim"] = g.dim();
    header["field"] = f.name();
    header["n"] = g.n();
    std::ostringstream os;
    os << "# " << header.dump() << "\n";
    os << (g.dim() == 1 ? "i,value\n" : "i,j,value\n");
    for (std::size_t k = 0; k < f.size(); ++k) {
        auto ij = g.multi_index(k);
        os << ij[0] << ',';
        if (g.dim() == 2) os << ij[1] << ',';
        os << format_double(f[k]) << '\n';
    }
    return os.str();
}

GridFunction from_csv(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw IoError("grid CSV lacks JSON header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception &e) {
        throw IoError(std::string("bad grid CSV header: ") + e.what());
    }
    PeriodicGrid g(header.at("dim").get<int>(), header.at("n").get<int>());
    std::vector<double> values(g.size(), 0.0);
    std::vector<bool> seen(g.size(), false);
    std::getline(is, line); // column names
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (int(cells.size()) != g.dim() + 1) throw IoError("bad grid CSV row: " + line);
        int i = std::stoi(cells[0]);
        int j = g.dim() == 2 ? std::stoi(cells[1]) : 0;
        if (i < 0 || i >= g.n() || j < 0 || j >= g.n()) throw IoError("grid CSV index out of range");
        auto k = g.index(i, j);
        values[k] = std::stod(cells.back());
        seen[k] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw IoError("grid CSV is missing nodes");
    return GridFunction(g, std::move(values), header.value("field", std::string{}));
}

void write_csv(const GridFunction &f, const std::string &path) { write_text_file(path, to_csv(f)); }

GridFunction read_csv(const std::string &path) { return from_csv(read_text_file(path)); }

} // namespace dhj
