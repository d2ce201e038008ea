#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dhj/vec.hpp"

namespace dhj {

/// Linear, Catmull-Rom cubic, or Catmull-Rom clamped to the range of the
/// enclosing cell's corner values (no overshoot at kinks).
enum class Interp { Linear, Cubic, ClampedCubic };

const char *interp_name(Interp scheme);
Interp parse_interp(const std::string &name);

/// Uniform grid on the flat unit torus T^dim with n points per axis.
class PeriodicGrid {
  public:
    PeriodicGrid(int dim, int n);

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    double h() const noexcept { return 1.0 / n_; }
    std::size_t size() const noexcept { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }

    int wrap(int i) const noexcept {
        int r = i % n_;
        return r < 0 ? r + n_ : r;
    }
    std::size_t index(int i, int j = 0) const noexcept {
        return std::size_t(wrap(i)) + (dim_ == 2 ? std::size_t(wrap(j)) * n_ : 0);
    }
    /// Multi-index (i, j) of a flat index.
    std::array<int, 2> multi_index(std::size_t flat) const noexcept {
        return {int(flat % n_), dim_ == 2 ? int(flat / n_) : 0};
    }
    Vec node(std::size_t flat) const noexcept {
        auto ij = multi_index(flat);
        return {ij[0] * h(), dim_ == 2 ? ij[1] * h() : 0.0};
    }

    bool operator==(const PeriodicGrid &o) const noexcept { return dim_ == o.dim_ && n_ == o.n_; }

  private:
    int dim_;
    int n_;
};

/// Scalar field sampled on the nodes of a PeriodicGrid.
class GridFunction {
  public:
    GridFunction(PeriodicGrid grid, std::vector<double> values, std::string name = {});

    static GridFunction sample(const PeriodicGrid &grid, const std::function<double(const Vec &)> &f,
                               std::string name = {});
    static GridFunction constant(const PeriodicGrid &grid, double c, std::string name = {});

    const PeriodicGrid &grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    const std::string &name() const noexcept { return name_; }
    std::size_t size() const noexcept { return values_.size(); }

    GridFunction renamed(std::string name) const;
    double sup_norm() const;
    double max() const;
    double min() const;

  private:
    PeriodicGrid grid_;
    std::vector<double> values_;
    std::string name_;
};

/// Periodic interpolation; exact on grid nodes.
double interpolate(const GridFunction &f, const Vec &x, Interp scheme = Interp::Cubic);

/// Gradient of the interpolant at an arbitrary point.
Vec interpolate_gradient(const GridFunction &f, const Vec &x, Interp scheme = Interp::Cubic);

/// Central-difference gradient at a grid node.
Vec gradient(const GridFunction &f, std::size_t node);

struct SecondDifferenceConstants {
    double concave = 0.0; // max of (f(x+h)+f(x-h)-2f(x))/|h|^2
    double convex = 0.0;  // max of the negated quotient
    std::vector<int> scales;
    std::vector<double> concave_per_scale;
    std::vector<double> convex_per_scale;
};

/// One-sided second-difference bounds over nodes, axes and multiples of h.
SecondDifferenceConstants second_difference_constants(const GridFunction &f,
                                                      const std::vector<int> &scales = {1, 2, 4, 8});

/// (max - min) / max(max, floor) over per-scale constants. The floor keeps
/// round-off curvature of flat fields from reading as instability.
double scale_variation(const std::vector<double> &per_scale, double floor = 0.0);

/// Max |f - g| over nodes; throws GridMismatch on differing grids.
double sup_distance(const GridFunction &f, const GridFunction &g);

/// CSV with a JSON header comment line: `# {"dim":..,"field":..,"n":..}` then
/// `i[,j],value` rows at 17 significant digits.
std::string to_csv(const GridFunction &f);
GridFunction from_csv(const std::string &text);
void write_csv(const GridFunction &f, const std::string &path);
GridFunction read_csv(const std::string &path);

} // namespace dhj
