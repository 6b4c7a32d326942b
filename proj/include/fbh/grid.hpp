#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fbh {

enum class Shape { half, full };

enum class NodeTag : std::uint8_t { interior, planar, outer };

/// Axis-aligned sub-rectangle [x1_lo, x1_hi] x [xn_lo, xn_hi].
struct Region {
    double x1_lo, x1_hi, xn_lo, xn_hi;

    [[nodiscard]] bool contains(double x1, double xn, double eps = 1e-12) const {
        return x1 >= x1_lo - eps && x1 <= x1_hi + eps && xn >= xn_lo - eps && xn <= xn_hi + eps;
    }
};

/// Structured grid on Q+ = [-1,1] x [0,1] (half) or Q = [-1,1] x [-1,1] (full).
///
/// Nodes are ordered lexicographically with the x_n index outermost:
/// node(i, j) = j * (nx + 1) + i.
class Grid {
public:
    Grid(Shape shape, int nx, int ny);

    [[nodiscard]] Shape shape() const { return shape_; }
    [[nodiscard]] int nx() const { return nx_; }
    [[nodiscard]] int ny() const { return ny_; }
    [[nodiscard]] double h1() const { return h1_; }
    [[nodiscard]] double h2() const { return h2_; }
    [[nodiscard]] double xn_min() const { return shape_ == Shape::half ? 0.0 : -1.0; }
    [[nodiscard]] double xn_max() const { return 1.0; }

    [[nodiscard]] std::size_t node_count() const {
        return static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1);
    }
    [[nodiscard]] std::size_t node(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) + static_cast<std::size_t>(i);
    }
    [[nodiscard]] int i_of(std::size_t n) const { return static_cast<int>(n % static_cast<std::size_t>(nx_ + 1)); }
    [[nodiscard]] int j_of(std::size_t n) const { return static_cast<int>(n / static_cast<std::size_t>(nx_ + 1)); }

    [[nodiscard]] double x1(int i) const { return -1.0 + i * h1_; }
    [[nodiscard]] double xn(int j) const { return xn_min() + j * h2_; }

    [[nodiscard]] NodeTag tag(std::size_t n) const { return tags_[n]; }
    [[nodiscard]] NodeTag tag(int i, int j) const { return tags_[node(i, j)]; }
    [[nodiscard]] std::span<const NodeTag> tags() const { return tags_; }

    /// Distance from (x1, xn) to the outer boundary (the planar side excluded
    /// for half grids).
    [[nodiscard]] double outer_distance(double x1, double xn) const;

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.shape_ == b.shape_ && a.nx_ == b.nx_ && a.ny_ == b.ny_;
    }

private:
    Shape shape_;
    int nx_, ny_;
    double h1_, h2_;
    std::vector<NodeTag> tags_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Nodes and weights of bilinear interpolation at (x1, xn); throws
/// InvalidArgument outside the grid.
struct BilinearStencil {
    std::array<std::size_t, 4> nodes;
    std::array<double, 4> weights;
};
[[nodiscard]] BilinearStencil bilinear_stencil(const Grid& grid, double x1, double xn);

[[nodiscard]] GridPtr build_grid(Shape shape, int nx, int ny);

/// Nodal scalar field. Immutable after construction.
class GridFunction {
public:
    GridFunction(GridPtr grid, std::vector<double> values);
    GridFunction(GridPtr grid, const std::function<double(double, double)>& f);

    [[nodiscard]] const Grid& grid() const { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] double operator[](std::size_t n) const { return values_[n]; }
    [[nodiscard]] double at(int i, int j) const { return values_[grid_->node(i, j)]; }

    /// Bilinear interpolation; throws InvalidArgument outside the grid.
    [[nodiscard]] double interpolate(double x1, double xn) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Integral of x_n^s f over the grid with f bilinear per cell and the weight
/// integrated exactly in x_n.
[[nodiscard]] double integrate_weighted(const GridFunction& f, double s);

/// Same quadrature restricted to cells whose centre lies in `region`.
[[nodiscard]] double integrate_weighted(const GridFunction& f, double s, const Region& region);

/// sqrt(int x_n^s |grad f|^2) with edge-difference gradients and closed-form weights.
[[nodiscard]] double weighted_h1_seminorm(const GridFunction& f, double s);
[[nodiscard]] double weighted_h1_seminorm(const GridFunction& f, double s, const Region& region);

namespace quad {

/// int_a^b y^s dy for 0 <= a <= b (any a, b when s == 0).
[[nodiscard]] double power_moment(double a, double b, double s);

/// Weights of the two linear hats on [a, b] against y^s:
/// lo = int y^s (b - y)/(b - a), hi = int y^s (y - a)/(b - a).
struct HatWeights {
    double lo, hi;
};
[[nodiscard]] HatWeights hat_weights(double a, double b, double s);

}  // namespace quad

// Serialization.
void write_csv(std::ostream& os, const GridFunction& f);
[[nodiscard]] nlohmann::json to_json(const GridFunction& f);
[[nodiscard]] GridFunction grid_function_from_json(const nlohmann::json& j);

[[nodiscard]] std::string to_string(Shape shape);

}  // namespace fbh
