#include "fbh/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "fbh/errors.hpp"

namespace fbh {

Grid::Grid(Shape shape, int nx, int ny) : shape_(shape), nx_(nx), ny_(ny) {
    if (nx < 2 || ny < 2) {
        throw InvalidArgument("grid needs at least 2 cells per axis (got nx=" + std::to_string(nx) +
                              ", ny=" + std::to_string(ny) + ")");
    }
    h1_ = 2.0 / nx;
    h2_ = (xn_max() - xn_min()) / ny;
    tags_.resize(node_count(), NodeTag::interior);
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            NodeTag t = NodeTag::interior;
            if (shape == Shape::half && j == 0) {
                t = NodeTag::planar;
            } else if (i == 0 || i == nx || j == ny || j == 0) {
                t = NodeTag::outer;
            }
            tags_[node(i, j)] = t;
        }
    }
}

double Grid::outer_distance(double x1, double xn) const {
    double d = std::min({x1 + 1.0, 1.0 - x1, 1.0 - xn});
    if (shape_ == Shape::full) {
        d = std::min(d, xn + 1.0);
    }
    return std::max(d, 0.0);
}

GridPtr build_grid(Shape shape, int nx, int ny) { return std::make_shared<const Grid>(shape, nx, ny); }

GridFunction::GridFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) {
        throw InvalidArgument("grid function without grid");
    }
    if (values_.size() != grid_->node_count()) {
        throw InvalidArgument("grid function has " + std::to_string(values_.size()) + " values, grid has " +
                              std::to_string(grid_->node_count()) + " nodes");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("grid function values must be finite");
        }
    }
}

GridFunction::GridFunction(GridPtr grid, const std::function<double(double, double)>& f)
    : grid_(std::move(grid)) {
    values_.resize(grid_->node_count());
    for (int j = 0; j <= grid_->ny(); ++j) {
        for (int i = 0; i <= grid_->nx(); ++i) {
            values_[grid_->node(i, j)] = f(grid_->x1(i), grid_->xn(j));
        }
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("grid function values must be finite");
        }
    }
}

BilinearStencil bilinear_stencil(const Grid& g, double x1, double xn) {
    constexpr double eps = 1e-12;
    if (!(x1 >= -1.0 - eps && x1 <= 1.0 + eps && xn >= g.xn_min() - eps && xn <= g.xn_max() + eps)) {
        throw InvalidArgument("interpolation point outside the grid");
    }
    const double s = (x1 + 1.0) / g.h1();
    const double t = (xn - g.xn_min()) / g.h2();
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.nx() - 1);
    const int j = std::clamp(static_cast<int>(std::floor(t)), 0, g.ny() - 1);
    const double a = s - i;
    const double b = t - j;
    return {{g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)},
            {(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b}};
}

double GridFunction::interpolate(double x1, double xn) const {
    const auto st = bilinear_stencil(*grid_, x1, xn);
    double v = 0.0;
    for (int k = 0; k < 4; ++k) {
        v += st.weights[k] * values_[st.nodes[k]];
    }
    return v;
}

namespace quad {

double power_moment(double a, double b, double s) {
    if (s == 0.0) {
        return b - a;
    }
    if (s == 1.0) {
        return 0.5 * (b * b - a * a);
    }
    return (std::pow(b, s + 1.0) - std::pow(a, s + 1.0)) / (s + 1.0);
}

HatWeights hat_weights(double a, double b, double s) {
    const double h = b - a;
    if (s == 0.0) {
        return {0.5 * h, 0.5 * h};
    }
    const double m0 = power_moment(a, b, s);
    const double m1 = power_moment(a, b, s + 1.0);
    const double hi = (m1 - a * m0) / h;
    return {m0 - hi, hi};
}

}  // namespace quad

namespace {

void check_weight(const Grid& g, double s) {
    if (s < 0.0) {
        throw InvalidArgument("weight exponent must be non-negative");
    }
    if (s != 0.0 && g.shape() != Shape::half) {
        throw InvalidArgument("a non-zero weight exponent requires a half grid");
    }
}

}  // namespace

double integrate_weighted(const GridFunction& f, double s) {
    const Grid& g = f.grid();
    return integrate_weighted(f, s, Region{-1.0, 1.0, g.xn_min(), g.xn_max()});
}

double integrate_weighted(const GridFunction& f, double s, const Region& region) {
    const Grid& g = f.grid();
    check_weight(g, s);
    double total = 0.0;
    for (int j = 0; j < g.ny(); ++j) {
        const double yc = g.xn(j) + 0.5 * g.h2();
        if (yc < region.xn_lo || yc > region.xn_hi) {
            continue;
        }
        const auto w = quad::hat_weights(g.xn(j), g.xn(j + 1), s);
        double row = 0.0;
        for (int i = 0; i < g.nx(); ++i) {
            const double xc = g.x1(i) + 0.5 * g.h1();
            if (xc < region.x1_lo || xc > region.x1_hi) {
                continue;
            }
            row += w.lo * (f.at(i, j) + f.at(i + 1, j)) + w.hi * (f.at(i, j + 1) + f.at(i + 1, j + 1));
        }
        total += 0.5 * g.h1() * row;
    }
    return total;
}

double weighted_h1_seminorm(const GridFunction& f, double s) {
    const Grid& g = f.grid();
    return weighted_h1_seminorm(f, s, Region{-1.0, 1.0, g.xn_min(), g.xn_max()});
}

double weighted_h1_seminorm(const GridFunction& f, double s, const Region& region) {
    const Grid& g = f.grid();
    check_weight(g, s);
    const double h1 = g.h1();
    const double h2 = g.h2();
    double energy = 0.0;
    for (int j = 0; j < g.ny(); ++j) {
        const double yc = g.xn(j) + 0.5 * g.h2();
        if (yc < region.xn_lo || yc > region.xn_hi) {
            continue;
        }
        const auto w = quad::hat_weights(g.xn(j), g.xn(j + 1), s);
        const double wy = w.lo + w.hi;
        for (int i = 0; i < g.nx(); ++i) {
            const double xc = g.x1(i) + 0.5 * h1;
            if (xc < region.x1_lo || xc > region.x1_hi) {
                continue;
            }
            const double db = f.at(i + 1, j) - f.at(i, j);
            const double dt = f.at(i + 1, j + 1) - f.at(i, j + 1);
            const double dl = f.at(i, j + 1) - f.at(i, j);
            const double dr = f.at(i + 1, j + 1) - f.at(i + 1, j);
            energy += (w.lo * db * db + w.hi * dt * dt) / h1 + 0.5 * h1 * wy / (h2 * h2) * (dl * dl + dr * dr);
        }
    }
    return std::sqrt(energy);
}

std::string to_string(Shape shape) { return shape == Shape::half ? "half" : "full"; }

void write_csv(std::ostream& os, const GridFunction& f) {
    const Grid& g = f.grid();
    os << "i,j,x1,xn,value\n";
    os << std::setprecision(17);
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            os << i << ',' << j << ',' << g.x1(i) << ',' << g.xn(j) << ',' << f.at(i, j) << '\n';
        }
    }
}

nlohmann::json to_json(const GridFunction& f) {
    const Grid& g = f.grid();
    return {{"shape", to_string(g.shape())},
            {"nx", g.nx()},
            {"ny", g.ny()},
            {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridFunction grid_function_from_json(const nlohmann::json& j) {
    const std::string shape = j.at("shape").get<std::string>();
    if (shape != "half" && shape != "full") {
        throw InvalidArgument("unknown grid shape '" + shape + "'");
    }
    auto grid = build_grid(shape == "half" ? Shape::half : Shape::full, j.at("nx").get<int>(), j.at("ny").get<int>());
    return GridFunction(std::move(grid), j.at("values").get<std::vector<double>>());
}

}  // namespace fbh
