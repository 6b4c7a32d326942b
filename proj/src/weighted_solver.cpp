#include "fbh/weighted_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fbh/errors.hpp"

namespace fbh {

namespace {

void require_weight(const Grid& grid, double s) {
    if (s < 0.0) {
        throw InvalidArgument("weight exponent must be non-negative");
    }
    if (s != 0.0 && grid.shape() != Shape::half) {
        throw InvalidArgument("a non-zero weight exponent requires a half grid");
    }
}

// Corner order within a cell: 0 = (i, j), 1 = (i+1, j), 2 = (i, j+1), 3 = (i+1, j+1).
std::array<std::size_t, 4> cell_nodes(const Grid& g, int i, int j) {
    return {g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)};
}

using Local = std::array<std::array<double, 4>, 4>;
using Dir = std::array<double, 4>;

constexpr Dir d_bottom{-1, 1, 0, 0};
constexpr Dir d_top{0, 0, -1, 1};
constexpr Dir d_left{-1, 0, 1, 0};
constexpr Dir d_right{0, -1, 0, 1};

void add_outer(Local& m, double c, const Dir& u, const Dir& v) {
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            m[a][b] += c * u[a] * v[b];
        }
    }
}

}  // namespace

CsrMatrix assemble_nodal_stiffness(const Grid& g, std::span<const Sym2> coefficients, double s) {
    require_weight(g, s);
    if (coefficients.size() != g.node_count()) {
        throw InvalidArgument("coefficient count does not match grid");
    }
    const double h1 = g.h1();
    const double h2 = g.h2();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(g.nx()) * g.ny() * 16);
    for (int j = 0; j < g.ny(); ++j) {
        const auto w = quad::hat_weights(g.xn(j), g.xn(j + 1), s);
        const double wy = w.lo + w.hi;
        for (int i = 0; i < g.nx(); ++i) {
            const auto nodes = cell_nodes(g, i, j);
            Sym2 a{0.0, 0.0, 0.0};
            for (auto n : nodes) {
                a = a + 0.25 * coefficients[n];
            }
            Local m{};
            add_outer(m, a.a11 * w.lo / h1, d_bottom, d_bottom);
            add_outer(m, a.a11 * w.hi / h1, d_top, d_top);
            const double c22 = a.a22 * h1 * wy / (2.0 * h2 * h2);
            add_outer(m, c22, d_left, d_left);
            add_outer(m, c22, d_right, d_right);
            if (a.a12 != 0.0) {
                Dir v{}, z{};
                for (int k = 0; k < 4; ++k) {
                    v[k] = w.lo * d_bottom[k] + w.hi * d_top[k];
                    z[k] = d_left[k] + d_right[k];
                }
                const double c12 = a.a12 / (2.0 * h2);
                add_outer(m, c12, v, z);
                add_outer(m, c12, z, v);
            }
            for (int p = 0; p < 4; ++p) {
                for (int q = 0; q < 4; ++q) {
                    if (m[p][q] != 0.0) {
                        triplets.push_back({nodes[p], nodes[q], m[p][q]});
                    }
                }
            }
        }
    }
    return CsrMatrix(g.node_count(), g.node_count(), std::move(triplets));
}

std::vector<double> nodal_masses(const Grid& g, double s) {
    std::vector<double> m(g.node_count(), 0.0);
    for (int j = 0; j < g.ny(); ++j) {
        const auto w = quad::hat_weights(g.xn(j), g.xn(j + 1), s);
        for (int i = 0; i < g.nx(); ++i) {
            const auto nodes = cell_nodes(g, i, j);
            const double half = 0.5 * g.h1();
            m[nodes[0]] += half * w.lo;
            m[nodes[1]] += half * w.lo;
            m[nodes[2]] += half * w.hi;
            m[nodes[3]] += half * w.hi;
        }
    }
    return m;
}

WeightedOperator::WeightedOperator(GridPtr grid, double s, PlanarCondition planar, CsrMatrix full)
    : grid_(std::move(grid)), s_(s), planar_(planar), full_(std::move(full)) {
    const Grid& g = *grid_;
    unknown_index_.assign(g.node_count(), -1);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const NodeTag t = g.tag(n);
        bool constrained = t == NodeTag::outer;
        if (t == NodeTag::planar) {
            const int i = g.i_of(n);
            constrained = planar == PlanarCondition::dirichlet || i == 0 || i == g.nx();
        }
        if (!constrained) {
            unknown_index_[n] = static_cast<long>(unknowns_.size());
            unknowns_.push_back(n);
        }
    }
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < unknowns_.size(); ++r) {
        const auto cols = full_.row_cols(unknowns_[r]);
        const auto vals = full_.row_values(unknowns_[r]);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const long c = unknown_index_[cols[k]];
            if (c >= 0) {
                t.push_back({r, static_cast<std::size_t>(c), vals[k]});
            }
        }
    }
    stiffness_ = CsrMatrix(unknowns_.size(), unknowns_.size(), std::move(t));
    const auto masses = nodal_masses(g, 0.0);
    row_masses_.reserve(unknowns_.size());
    for (auto n : unknowns_) {
        row_masses_.push_back(masses[n]);
    }
}

WeightedOperator assemble_weighted(const CoefficientField& a, double s, PlanarCondition planar) {
    if (a.grid().shape() != Shape::half) {
        throw InvalidArgument("assemble_weighted requires a half grid");
    }
    require_weight(a.grid(), s);
    auto full = assemble_nodal_stiffness(a.grid(), a.entries(), s);
    return WeightedOperator(a.grid_ptr(), s, planar, std::move(full));
}

WeightedOperator assemble_elliptic(const CoefficientField& a) {
    auto full = assemble_nodal_stiffness(a.grid(), a.entries(), 0.0);
    return WeightedOperator(a.grid_ptr(), 0.0, PlanarCondition::dirichlet, std::move(full));
}

std::vector<double> assemble_rhs_full(const Grid& g, double s, const VectorField& f, const GridFunction* gfun) {
    require_weight(g, s);
    if (!(f.grid() == g) || (gfun && !(gfun->grid() == g))) {
        throw InvalidArgument("right-hand side fields do not match the grid");
    }
    std::vector<double> b(g.node_count(), 0.0);
    const double h1 = g.h1();
    const double h2 = g.h2();
    for (int j = 0; j < g.ny(); ++j) {
        const auto w = quad::hat_weights(g.xn(j), g.xn(j + 1), s);
        const double wy = w.lo + w.hi;
        for (int i = 0; i < g.nx(); ++i) {
            const auto nodes = cell_nodes(g, i, j);
            Vec2 fc{};
            for (auto n : nodes) {
                fc.v1 += 0.25 * f[n].v1;
                fc.vn += 0.25 * f[n].vn;
            }
            const double cy = 0.5 * h1 * wy / h2;
            for (int k = 0; k < 4; ++k) {
                b[nodes[k]] += fc.v1 * (w.lo * d_bottom[k] + w.hi * d_top[k]) + fc.vn * cy * (d_left[k] + d_right[k]);
            }
        }
    }
    if (gfun) {
        const auto m1 = nodal_masses(g, 1.0);
        for (std::size_t n = 0; n < b.size(); ++n) {
            b[n] -= (*gfun)[n] * m1[n];
        }
    }
    return b;
}

std::vector<double> assemble_rhs(const WeightedOperator& op, const VectorField& f, const GridFunction* g) {
    const auto full = assemble_rhs_full(op.grid(), op.weight_exponent(), f, g);
    std::vector<double> b;
    b.reserve(op.unknowns().size());
    for (auto n : op.unknowns()) {
        b.push_back(full[n]);
    }
    return b;
}

BoundaryData BoundaryData::from_function(const Grid& grid, const std::function<double(double, double)>& f) {
    BoundaryData bd;
    bd.values.resize(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        bd.values[n] = f(grid.x1(grid.i_of(n)), grid.xn(grid.j_of(n)));
    }
    return bd;
}

BoundaryData BoundaryData::from_grid_function(const GridFunction& f) {
    return BoundaryData{std::vector<double>(f.values().begin(), f.values().end())};
}

BoundaryData BoundaryData::constant(const Grid& grid, double c) {
    return BoundaryData{std::vector<double>(grid.node_count(), c)};
}

SolveResult solve(const WeightedOperator& op, std::span<const double> rhs, const BoundaryData& bd,
                  const CgOptions& options) {
    const Grid& g = op.grid();
    if (rhs.size() != op.unknowns().size() || bd.values.size() != g.node_count()) {
        throw InvalidArgument("solve: dimension mismatch");
    }
    // Lift the prescribed values: b_u = rhs - K_uc w_c.
    std::vector<double> lifted(g.node_count(), 0.0);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (op.is_constrained(n)) {
            if (!std::isfinite(bd.values[n])) {
                throw InvalidArgument("boundary data must be finite");
            }
            lifted[n] = bd.values[n];
        }
    }
    const auto k_lift = op.nodal_stiffness() * lifted;
    std::vector<double> b(rhs.begin(), rhs.end());
    for (std::size_t r = 0; r < b.size(); ++r) {
        b[r] -= k_lift[op.unknowns()[r]];
    }
    auto cg = conjugate_gradient(op.stiffness(), b, std::vector<double>(b.size(), 0.0), options);
    if (!cg.converged) {
        const std::string what = "conjugate gradient did not converge in " + std::to_string(cg.iterations) +
                                 " iterations (relative residual " + std::to_string(cg.residual_history.back()) + ")";
        throw SolverError(what, std::move(cg.residual_history));
    }
    for (std::size_t r = 0; r < cg.x.size(); ++r) {
        lifted[op.unknowns()[r]] = cg.x[r];
    }
    return SolveResult{GridFunction(op.grid_ptr(), std::move(lifted)), cg.iterations, std::move(cg.residual_history)};
}

std::vector<double> residual_vector(const WeightedOperator& op, const GridFunction& w, std::span<const double> rhs) {
    if (!(w.grid() == op.grid()) || rhs.size() != op.unknowns().size()) {
        throw InvalidArgument("residual: dimension mismatch");
    }
    const auto kw = op.nodal_stiffness() * w.values();
    std::vector<double> r(rhs.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = kw[op.unknowns()[k]] - rhs[k];
    }
    return r;
}

double residual_norm(const WeightedOperator& op, const GridFunction& w, std::span<const double> rhs) {
    return norm2(residual_vector(op, w, rhs));
}

double scaled_residual(const WeightedOperator& op, const GridFunction& w, std::span<const double> rhs,
                       bool interior_only) {
    const auto r = residual_vector(op, w, rhs);
    double worst = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (interior_only && op.grid().tag(op.unknowns()[k]) != NodeTag::interior) {
            continue;
        }
        worst = std::max(worst, std::abs(r[k]) / op.row_masses()[k]);
    }
    return worst;
}

double discrete_energy(const WeightedOperator& op, const GridFunction& w) {
    const auto kw = op.nodal_stiffness() * w.values();
    return dot(w.values(), kw);
}

double boundary_pairing(const WeightedOperator& op, const GridFunction& w) {
    const auto kw = op.nodal_stiffness() * w.values();
    double s = 0.0;
    for (std::size_t n = 0; n < kw.size(); ++n) {
        if (op.is_constrained(n)) {
            s += w[n] * kw[n];
        }
    }
    return s;
}

std::optional<double> poincare_ratio(const GridFunction& f) {
    const Grid& g = f.grid();
    if (g.shape() != Shape::half) {
        throw InvalidArgument("poincare_ratio requires a half grid");
    }
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (g.tag(n) == NodeTag::outer && std::abs(f[n]) > 1e-12) {
            throw InvalidArgument("poincare_ratio requires zero outer trace");
        }
    }
    std::vector<double> sq(f.values().begin(), f.values().end());
    for (double& v : sq) {
        v *= v;
    }
    const double num = integrate_weighted(GridFunction(f.grid_ptr(), std::move(sq)), 0.0);
    const double den = std::pow(weighted_h1_seminorm(f, 2.0), 2);
    if (den <= 0.0) {
        return std::nullopt;
    }
    return num / den;
}

nlohmann::json to_json(const SolveResult& r) {
    return {{"iterations", r.iterations}, {"residual_history", r.residual_history}};
}

}  // namespace fbh
