#include "fbh/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include <Eigen/Dense>

#include "fbh/errors.hpp"
#include "fbh/stats.hpp"
#include "fbh/weighted_solver.hpp"

namespace fbh {

namespace {

void require_half(const Grid& g, const char* what) {
    if (g.shape() != Shape::half) {
        throw InvalidArgument(std::string(what) + " requires a half grid");
    }
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) {
        throw InvalidArgument(std::string(what) + ": fields live on different grids");
    }
}

// u/x_n at node (i, j), one-sided quotient on the planar row.
double quotient_xn(const GridFunction& u, int i, int j) {
    const Grid& g = u.grid();
    if (j == 0) {
        return (u.at(i, 1) - u.at(i, 0)) / g.h2();
    }
    return u.at(i, j) / g.xn(j);
}

// First derivative along one axis: central inside, second-order one-sided at the ends.
std::vector<double> difference(const Grid& g, std::span<const double> v, bool along_x1) {
    std::vector<double> d(v.size());
    const int n = along_x1 ? g.nx() : g.ny();
    const double h = along_x1 ? g.h1() : g.h2();
    auto at = [&](int i, int j, int s) { return along_x1 ? v[g.node(s, j)] : v[g.node(i, s)]; };
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            const int s = along_x1 ? i : j;
            double r;
            if (s == 0) {
                r = (-3.0 * at(i, j, 0) + 4.0 * at(i, j, 1) - at(i, j, 2)) / (2.0 * h);
            } else if (s == n) {
                r = (3.0 * at(i, j, n) - 4.0 * at(i, j, n - 1) + at(i, j, n - 2)) / (2.0 * h);
            } else {
                r = (at(i, j, s + 1) - at(i, j, s - 1)) / (2.0 * h);
            }
            d[g.node(i, j)] = r;
        }
    }
    return d;
}

std::vector<Vec2> gradient(const GridFunction& f) {
    const auto d1 = difference(f.grid(), f.values(), true);
    const auto dn = difference(f.grid(), f.values(), false);
    std::vector<Vec2> g(d1.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
        g[n] = {d1[n], dn[n]};
    }
    return g;
}

// Hoelder quotient over the nodes of the index box [i0, i1] x [j0, j1] that
// pass `keep`. `diff(a, b)` is |f(a) - f(b)| for node indices a, b.
template <class Keep, class Diff>
double holder_on_box(const Grid& g, int i0, int i1, int j0, int j1, double alpha, Keep keep, Diff diff) {
    std::vector<std::pair<int, int>> nodes;
    for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
            if (keep(i, j)) {
                nodes.emplace_back(i, j);
            }
        }
    }
    const double h1 = g.h1();
    const double h2 = g.h2();
    auto quotient = [&](int ia, int ja, int ib, int jb) {
        const double dx = (ia - ib) * h1;
        const double dy = (ja - jb) * h2;
        const double dist = std::hypot(dx, dy);
        return diff(g.node(ia, ja), g.node(ib, jb)) / std::pow(dist, alpha);
    };
    double best = 0.0;
    if (nodes.size() <= 2000) {
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                best = std::max(best, quotient(nodes[a].first, nodes[a].second, nodes[b].first, nodes[b].second));
            }
        }
        return best;
    }
    const int span = std::max(i1 - i0, j1 - j0);
    static constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (const auto& [i, j] : nodes) {
        for (int d = 1; d <= span; d *= 2) {
            for (const auto& dir : dirs) {
                const int ib = i + d * dir[0];
                const int jb = j + d * dir[1];
                if (ib < i0 || ib > i1 || jb < j0 || jb > j1 || !keep(ib, jb)) {
                    continue;
                }
                best = std::max(best, quotient(i, j, ib, jb));
            }
        }
    }
    // Extreme nodes in index order catch the longest separations.
    const std::size_t m = nodes.size();
    const std::size_t picks[] = {0, m - 1, m / 2};
    for (auto a : picks) {
        for (const auto& [ib, jb] : nodes) {
            if (nodes[a].first != ib || nodes[a].second != jb) {
                best = std::max(best, quotient(nodes[a].first, nodes[a].second, ib, jb));
            }
        }
    }
    return best;
}

struct IndexBox {
    int i0, i1, j0, j1;
};

IndexBox box_of(const Grid& g, const Region& r) {
    constexpr double eps = 1e-9;
    IndexBox b{static_cast<int>(std::ceil((r.x1_lo + 1.0) / g.h1() - eps)),
               static_cast<int>(std::floor((r.x1_hi + 1.0) / g.h1() + eps)),
               static_cast<int>(std::ceil((r.xn_lo - g.xn_min()) / g.h2() - eps)),
               static_cast<int>(std::floor((r.xn_hi - g.xn_min()) / g.h2() + eps))};
    b.i0 = std::max(b.i0, 0);
    b.j0 = std::max(b.j0, 0);
    b.i1 = std::min(b.i1, g.nx());
    b.j1 = std::min(b.j1, g.ny());
    return b;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
    }
}

template <class Diff>
double holder_region(const Grid& g, double alpha, const Region& region, Diff diff) {
    check_alpha(alpha);
    const auto b = box_of(g, region);
    if (b.i1 < b.i0 || b.j1 < b.j0 || (b.i1 - b.i0 + 1) * (b.j1 - b.j0 + 1) < 2) {
        throw InvalidArgument("region contains fewer than 2 nodes");
    }
    return holder_on_box(g, b.i0, b.i1, b.j0, b.j1, alpha, [](int, int) { return true; }, diff);
}

}  // namespace

double hopf_floor(const GridFunction& u) {
    const Grid& g = u.grid();
    require_half(g, "hopf_floor");
    double floor = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            floor = std::min(floor, quotient_xn(u, i, j));
        }
    }
    return floor;
}

GridFunction divide_by_xn(const GridFunction& u) {
    const Grid& g = u.grid();
    require_half(g, "divide_by_xn");
    std::vector<double> q(g.node_count());
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            q[g.node(i, j)] = quotient_xn(u, i, j);
        }
    }
    return GridFunction(u.grid_ptr(), std::move(q));
}

GridFunction ratio(const GridFunction& u1, const GridFunction& u2, double floor_tol) {
    require_same_grid(u1.grid(), u2.grid(), "ratio");
    if (!(floor_tol > 0.0)) {
        throw InvalidArgument("floor tolerance must be positive");
    }
    const double floor = hopf_floor(u2);
    if (!(floor >= floor_tol)) {
        throw HypothesisViolation("u2 / x_n floor " + std::to_string(floor) + " is below " + std::to_string(floor_tol),
                                  floor);
    }
    const Grid& g = u1.grid();
    std::vector<double> w(g.node_count());
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            w[g.node(i, j)] = j == 0 ? (u1.at(i, 1) - u1.at(i, 0)) / (u2.at(i, 1) - u2.at(i, 0))
                                     : u1.at(i, j) / u2.at(i, j);
        }
    }
    return GridFunction(u1.grid_ptr(), std::move(w));
}

double ratio_residual(const GridFunction& w, const GridFunction& u2, const CoefficientField& a, const VectorField& f1,
                      const VectorField& f2) {
    const Grid& g = w.grid();
    for (const Grid* other : {&u2.grid(), &a.grid(), &f1.grid(), &f2.grid()}) {
        require_same_grid(g, *other, "ratio_residual");
    }
    const std::size_t nn = g.node_count();
    std::vector<double> u1(nn);
    std::vector<Sym2> coeff(nn);
    for (std::size_t n = 0; n < nn; ++n) {
        u1[n] = w[n] * u2[n];
        coeff[n] = (u2[n] * u2[n]) * a[n];
    }
    const GridFunction u1f(w.grid_ptr(), u1);
    const auto gu1 = gradient(u1f);
    const auto gu2 = gradient(u2);

    std::vector<Vec2> flux(nn);
    std::vector<double> source(nn);
    for (std::size_t n = 0; n < nn; ++n) {
        flux[n] = {u2[n] * f1[n].v1 - u1[n] * f2[n].v1, u2[n] * f1[n].vn - u1[n] * f2[n].vn};
        source[n] = f2[n].v1 * gu1[n].v1 + f2[n].vn * gu1[n].vn - f1[n].v1 * gu2[n].v1 - f1[n].vn * gu2[n].vn;
    }
    const auto k = assemble_nodal_stiffness(g, coeff, 0.0);
    const auto kw = k * w.values();
    const auto b = assemble_rhs_full(g, 0.0, VectorField(w.grid_ptr(), std::move(flux)), nullptr);
    const auto m = nodal_masses(g, 0.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < nn; ++n) {
        if (g.tag(n) != NodeTag::interior) {
            continue;
        }
        worst = std::max(worst, std::abs(kw[n] - b[n] + m[n] * source[n]) / m[n]);
    }
    return worst;
}

MatrixGradient numerical_gradient(const MatrixFunction& b) {
    return [b](double y1, double yn) {
        constexpr double d = 1e-5;
        auto diff = [](const Sym2& p, const Sym2& m) {
            return Sym2{(p.a11 - m.a11) / (2 * d), (p.a12 - m.a12) / (2 * d), (p.a22 - m.a22) / (2 * d)};
        };
        return std::array<Sym2, 2>{diff(b(y1 + d, yn), b(y1 - d, yn)), diff(b(y1, yn + d), b(y1, yn - d))};
    };
}

RatioSystemFields build_ratio_system(const std::vector<GridFunction>& u, const CurveModel& c, const MatrixFunction& b,
                                     const MatrixGradient& grad_b, int k) {
    if (u.size() != 2) {
        throw InvalidArgument("build_ratio_system expects u_1, u_2 in two dimensions");
    }
    if (k != 1) {
        throw InvalidArgument("ratio index k must be 1 (tangential) in two dimensions");
    }
    require_same_grid(u[0].grid(), u[1].grid(), "build_ratio_system");
    const GridPtr& grid = u[0].grid_ptr();
    const Grid& g = *grid;
    require_half(g, "build_ratio_system");
    const double floor = hopf_floor(u[1]);
    if (!(floor > 0.0)) {
        throw HypothesisViolation("u_n / x_n floor " + std::to_string(floor) + " is not positive", floor);
    }

    CoefficientField a = transform_coefficients(b, c, grid);
    const std::array<GridFunction, 2> q{divide_by_xn(u[0]), divide_by_xn(u[1])};
    const auto grad_uk = gradient(u[0]);
    const auto grad_un = gradient(u[1]);

    const std::size_t nn = g.node_count();
    std::vector<Sym2> at(nn);
    std::vector<Vec2> F(nn), H(nn);
    std::vector<double> G(nn);
    auto entry = [](const Sym2& s, int p, int r) { return p == r ? (p == 0 ? s.a11 : s.a22) : s.a12; };
    for (std::size_t n = 0; n < nn; ++n) {
        const double x1 = g.x1(g.i_of(n));
        const double xn = g.xn(g.j_of(n));
        const auto jac = jacobians(c, x1, xn);
        const auto y = to_y(c, x1, xn);
        const auto db = grad_b(y[0], y[1]);  // db[0] = d/dy_k (k = 1), db[1] = d/dy_n
        const double qk = q[0][n];
        const double qn = q[1][n];
        at[n] = (qn * qn) * a[n];

        // T_i^{(m)} = J_ip d_m b^{pq} (u_q / x_n) and the same with u_q.
        double tq[2][2] = {{0, 0}, {0, 0}};
        double tu[2][2] = {{0, 0}, {0, 0}};
        for (int m = 0; m < 2; ++m) {
            for (int i = 0; i < 2; ++i) {
                for (int p = 0; p < 2; ++p) {
                    for (int r = 0; r < 2; ++r) {
                        const double jb = jac.dx_dy(i, p) * entry(db[m], p, r);
                        tq[m][i] += jb * q[r][n];
                        tu[m][i] += jb * u[r][n];
                    }
                }
            }
        }
        F[n] = {qk * tq[1][0] - qn * tq[0][0], qk * tq[1][1] - qn * tq[0][1]};
        G[n] = tq[0][0] * grad_un[n].v1 + tq[0][1] * grad_un[n].vn - tq[1][0] * grad_uk[n].v1 -
               tq[1][1] * grad_uk[n].vn;
        H[n] = {tu[0][0], tu[0][1]};
    }
    return {std::move(a), CoefficientField::with_computed_bounds(grid, std::move(at)), VectorField(grid, std::move(F)),
            GridFunction(grid, std::move(G)), VectorField(grid, std::move(H))};
}

double holder_seminorm(const GridFunction& f, double alpha, const Region& region) {
    return holder_region(f.grid(), alpha, region,
                         [&](std::size_t a, std::size_t b) { return std::abs(f[a] - f[b]); });
}

double holder_seminorm(const VectorField& f, double alpha, const Region& region) {
    return holder_region(f.grid(), alpha, region, [&](std::size_t a, std::size_t b) {
        return std::hypot(f[a].v1 - f[b].v1, f[a].vn - f[b].vn);
    });
}

int max_campanato_scales(const Grid& g, double S) {
    if (!(S > 0.0 && S < 1.0)) {
        throw InvalidArgument("shrinking rate must lie in (0, 1)");
    }
    const double finest = 4.0 * std::max(g.h1(), g.h2()) * (1.0 - 1e-12);
    int K = 0;
    while (std::pow(S, K + 1) >= finest) {
        ++K;
    }
    return K;
}

std::optional<double> CampanatoReport::mean_ratio() const {
    const double top = sigma.empty() ? 0.0 : *std::max_element(sigma.begin(), sigma.end());
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 1; k + 1 < sigma.size(); ++k) {
        if (sigma[k] > 1e-12 * top && sigma[k + 1] > 1e-12 * top) {
            sum += sigma[k + 1] / sigma[k];
            ++count;
        }
    }
    if (count == 0) {
        return std::nullopt;
    }
    return sum / count;
}

namespace {

struct Linear {
    double c0, c1;
};

// L2 projection of v onto span{1, x_1} over the cells of `r`.
Linear project_linear(const Grid& g, std::span<const double> v, const Region& r) {
    double m00 = 0, m01 = 0, m11 = 0, b0 = 0, b1 = 0;
    const double q = 0.25 * g.h1() * g.h2();
    for (int j = 0; j < g.ny(); ++j) {
        const double yc = g.xn(j) + 0.5 * g.h2();
        if (yc < r.xn_lo || yc > r.xn_hi) {
            continue;
        }
        for (int i = 0; i < g.nx(); ++i) {
            const double xc = g.x1(i) + 0.5 * g.h1();
            if (xc < r.x1_lo || xc > r.x1_hi) {
                continue;
            }
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    const double x = g.x1(i + di);
                    const double val = v[g.node(i + di, j + dj)];
                    m00 += q;
                    m01 += q * x;
                    m11 += q * x * x;
                    b0 += q * val;
                    b1 += q * x * val;
                }
            }
        }
    }
    const double det = m00 * m11 - m01 * m01;
    if (!(det > 0.0)) {
        throw InvalidArgument("projection region has no cells");
    }
    return {(m11 * b0 - m01 * b1) / det, (m00 * b1 - m01 * b0) / det};
}

// Degenerate replacement on the half box of radius rho: div(x_n^2 A0 grad h) = 0
// with h = v on the outer boundary, linearised at the origin. Solved on a fixed
// reference grid by scale invariance.
class Replacement {
public:
    explicit Replacement(const Sym2& a0)
        : ref_(build_grid(Shape::half, 32, 16)),
          op_(assemble_weighted(CoefficientField::from_function(ref_, [a0](double, double) { return a0; }), 2.0)) {}

    Linear linearize(const GridFunction& v, double rho) const {
        const Grid& r = *ref_;
        const auto bd = BoundaryData::from_function(r, [&](double z1, double zn) { return v.interpolate(rho * z1, rho * zn); });
        const std::vector<double> rhs(op_.unknowns().size(), 0.0);
        const auto sol = solve(op_, rhs, bd).w;
        const int c = r.nx() / 2;
        return {sol.at(c, 0), (sol.at(c + 1, 0) - sol.at(c - 1, 0)) / (2.0 * r.h1() * rho)};
    }

private:
    GridPtr ref_;
    WeightedOperator op_;
};

}  // namespace

CampanatoReport campanato_scan(const GridFunction& w, const VectorField& f, double alpha, double S, int K,
                               CampanatoMode mode, const CoefficientField* a) {
    const Grid& g = w.grid();
    require_half(g, "campanato_scan");
    require_same_grid(g, f.grid(), "campanato_scan");
    if (a) {
        require_same_grid(g, a->grid(), "campanato_scan");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    if (!(S > 0.0 && S <= 0.5)) {
        throw InvalidArgument("shrinking rate must lie in (0, 1/2]");
    }
    if (K < 0) {
        throw InvalidArgument("number of scales must be non-negative");
    }
    if (K > max_campanato_scales(g, S)) {
        throw InvalidArgument("finest scale S^K = " + std::to_string(std::pow(S, K)) +
                              " is below 4 grid steps; at most K = " + std::to_string(max_campanato_scales(g, S)));
    }

    CampanatoReport rep{S, alpha, K, mode, {}, {}, {}, 0.0, 0.0, 0.0, std::nullopt};
    const std::size_t nn = g.node_count();
    std::vector<double> wk(w.values().begin(), w.values().end());
    std::vector<Vec2> fk = f.values();
    std::optional<Replacement> repl;
    if (mode == CampanatoMode::replacement) {
        repl.emplace(a ? a->interpolate(0.0, 0.0) : Sym2{});
    }

    for (int k = 0; k <= K; ++k) {
        const double scale = std::pow(S, k);
        const Region rk{-scale, scale, 0.0, scale};
        std::vector<double> sq(nn);
        for (std::size_t n = 0; n < nn; ++n) {
            sq[n] = wk[n] * wk[n];
        }
        const double integral = integrate_weighted(GridFunction(w.grid_ptr(), std::move(sq)), 0.0, rk);
        rep.scale.push_back(scale);
        rep.sigma.push_back(std::sqrt(std::pow(S, -k * (4.0 + 2.0 * alpha)) * integral));
        rep.chi.push_back(holder_seminorm(VectorField(w.grid_ptr(), fk), alpha, rk));

        const Linear l = mode == CampanatoMode::l2fit
                             ? project_linear(g, wk, rk)
                             : repl->linearize(GridFunction(w.grid_ptr(), wk), 0.5 * scale);
        rep.p0 += l.c0;
        rep.p1 += l.c1;
        for (std::size_t n = 0; n < nn; ++n) {
            wk[n] -= l.c0 + l.c1 * g.x1(g.i_of(n));
            if (a) {
                const Sym2& an = (*a)[n];
                fk[n].v1 += (1.0 - an.a11) * l.c1;
                fk[n].vn += -an.a12 * l.c1;
            }
        }
    }

    const double top = *std::max_element(rep.sigma.begin(), rep.sigma.end());
    std::vector<double> ks, logs;
    for (int k = 1; k <= K; ++k) {
        if (rep.sigma[k] > 1e-12 * top) {
            ks.push_back(k);
            logs.push_back(std::log(rep.sigma[k]));
        }
    }
    if (ks.size() >= 2) {
        rep.fitted_decay = stats::slope(ks, logs);
    }
    return rep;
}

GridFunction grid_derivative(const GridFunction& f, int b1, int bn) {
    if (b1 < 0 || bn < 0) {
        throw InvalidArgument("derivative orders must be non-negative");
    }
    const Grid& g = f.grid();
    std::vector<double> v(f.values().begin(), f.values().end());
    for (int r = 0; r < b1; ++r) {
        v = difference(g, v, true);
    }
    for (int r = 0; r < bn; ++r) {
        v = difference(g, v, false);
    }
    return GridFunction(f.grid_ptr(), std::move(v));
}

GlobalNormResult global_norm_coeff(const GridFunction& f, const GlobalNormSpec& spec, int max_centers_per_axis) {
    if (spec.k < 0 || spec.k > spec.k_max) {
        throw InvalidArgument("derivative order " + std::to_string(spec.k) + " exceeds k_max = " +
                              std::to_string(spec.k_max));
    }
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    if (spec.b != 0 && spec.b != 1) {
        throw InvalidArgument("normal-derivative budget b must be 0 or 1");
    }
    if (spec.l < 0) {
        throw InvalidArgument("growth exponent l must be non-negative");
    }
    if (max_centers_per_axis < 2) {
        throw InvalidArgument("need at least 2 centres per axis");
    }
    const Grid& g = f.grid();
    std::vector<GridFunction> derivs;
    for (int bn = 0; bn <= std::min(spec.b, spec.k); ++bn) {
        derivs.push_back(grid_derivative(f, spec.k - bn, bn));
    }

    // Strides that keep x_1 = 0 (and the bottom row) among the centres when possible.
    auto stride_for = [&](int n) {
        int s = std::max(1, (n + max_centers_per_axis - 2) / (max_centers_per_axis - 1));
        if (n % 2 == 0) {
            while (s > 1 && (n / 2) % s != 0) {
                --s;
            }
        }
        return s;
    };
    const int si = stride_for(g.nx());
    const int sj = stride_for(g.ny());
    const double hmax = std::max(g.h1(), g.h2());

    GlobalNormResult res{0.0, 0, 0};
    for (int jc = 0; jc <= g.ny(); jc += sj) {
        for (int ic = 0; ic <= g.nx(); ic += si) {
            const double x1 = g.x1(ic);
            const double xn = g.xn(jc);
            const double delta = g.outer_distance(x1, xn);
            if (delta <= 0.0) {
                continue;
            }
            const double r = delta / (spec.l + 1);
            if (r < spec.k * hmax) {
                ++res.skipped_centers;
                continue;
            }
            ++res.centers;
            const Region box{x1 - r, x1 + r, xn - r, xn + r};
            const auto b = box_of(g, box);
            auto inside = [&](int i, int j) { return std::hypot(g.x1(i) - x1, g.xn(j) - xn) <= r * (1 + 1e-12); };
            for (const auto& d : derivs) {
                double sup = 0.0;
                for (int j = b.j0; j <= b.j1; ++j) {
                    for (int i = b.i0; i <= b.i1; ++i) {
                        if (inside(i, j)) {
                            sup = std::max(sup, std::abs(d.at(i, j)));
                        }
                    }
                }
                const double hol = holder_on_box(g, b.i0, b.i1, b.j0, b.j1, spec.alpha, inside,
                                                 [&](std::size_t p, std::size_t q) { return std::abs(d[p] - d[q]); });
                res.value = std::max(res.value, std::pow(delta, spec.l) * (sup + std::pow(delta, spec.alpha) * hol));
            }
        }
    }
    return res;
}

AnalyticityReport analyticity_scan(const std::vector<double>& x, const std::vector<double>& gamma, int Kmax,
                                   double window, double center) {
    if (x.size() != gamma.size()) {
        throw InvalidArgument("sample abscissae and values differ in length");
    }
    if (Kmax < 1) {
        throw InvalidArgument("Kmax must be at least 1");
    }
    if (!(window > 0.0)) {
        throw InvalidArgument("window must be positive");
    }
    std::vector<double> z, v;
    for (std::size_t m = 0; m < x.size(); ++m) {
        if (std::abs(x[m] - center) <= window * (1 + 1e-12)) {
            if (!std::isfinite(gamma[m])) {
                throw InvalidArgument("curve samples must be finite");
            }
            z.push_back((x[m] - center) / window);
            v.push_back(gamma[m]);
        }
    }
    AnalyticityReport rep{Kmax, Kmax, window, center, {}, {}, 0.0, 0.0, 0.0, {}};
    int K = std::min<int>(Kmax, static_cast<int>(z.size()) / 4);
    if (K < 1) {
        throw InvalidArgument("window holds " + std::to_string(z.size()) + " samples; at least 4 are needed");
    }
    if (K < Kmax) {
        rep.warnings.push_back("Kmax reduced from " + std::to_string(Kmax) + " to " + std::to_string(K) + ": only " +
                               std::to_string(z.size()) + " samples in the window");
    }

    const Eigen::Index m = static_cast<Eigen::Index>(z.size());
    const Eigen::Map<const Eigen::VectorXd> rhs(v.data(), m);
    Eigen::VectorXd coef;
    for (;; --K) {
        Eigen::MatrixXd vz(m, K + 1), vx(m, K + 1);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (int c = 0; c <= K; ++c) {
                vz(r, c) = std::pow(z[r], c);
                vx(r, c) = std::pow(z[r] * window, c);
            }
        }
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(vx);
        const auto& sv = svd.singularValues();
        rep.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
        if (rep.condition < 1e12 || K == 1) {
            coef = vz.colPivHouseholderQr().solve(rhs);
            rep.residual_rms = (vz * coef - rhs).norm() / std::sqrt(static_cast<double>(m));
            break;
        }
        rep.warnings.push_back("Vandermonde condition " + std::to_string(rep.condition) + " at order " +
                               std::to_string(K) + "; order reduced");
    }
    rep.order = K;

    // Residual level of each coefficient: rms propagated through (V^T V)^{-1}.
    Eigen::MatrixXd vz(m, K + 1);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (int c = 0; c <= K; ++c) {
            vz(r, c) = std::pow(z[r], c);
        }
    }
    const Eigen::MatrixXd gram_inv = (vz.transpose() * vz).inverse();
    const double top = coef.cwiseAbs().maxCoeff();
    // Contributions below 1e-8 of the curve's length scale are below the
    // resolution of any extracted curve, however well the fit closes.
    double scale = window;
    for (double g : v) {
        scale = std::max(scale, std::abs(g));
    }
    for (int k = 0; k <= K; ++k) {
        const double a = std::abs(coef(k));
        const double level = rep.residual_rms * std::sqrt(gram_inv(k, k));
        rep.coefficients.push_back(a / std::pow(window, k));
        rep.usable.push_back(a > 10.0 * level && a > 1e-10 * top && a > 1e-8 * scale);
    }

    rep.radius = std::numeric_limits<double>::infinity();
    std::vector<int> orders;
    for (int k = 1; k <= K; ++k) {
        if (rep.usable[k]) {
            orders.push_back(k);
        }
    }
    if (orders.size() >= 2) {
        const int k0 = orders.front();
        std::vector<double> roots;
        const int count = static_cast<int>(orders.size());
        for (int t = std::max(1, count - 3); t < count; ++t) {
            const int k = orders[t];
            roots.push_back(std::pow(rep.coefficients[k] / rep.coefficients[k0], 1.0 / (k - k0)));
        }
        rep.radius = 1.0 / stats::median(roots);
    }
    return rep;
}

AnalyticityReport analyticity_scan(const CurveModel& c, int Kmax, double window) {
    if (Kmax < 1 || !(window > 0.0)) {
        throw InvalidArgument("Kmax must be at least 1 and the window positive");
    }
    const int count = 8 * Kmax + 1;
    std::vector<double> x(count), v(count);
    for (int m = 0; m < count; ++m) {
        x[m] = -window + 2.0 * window * m / (count - 1);
        v[m] = c(x[m]);
    }
    return analyticity_scan(x, v, Kmax, window, 0.0);
}

double slope_limited_window(const FreeBoundaryCurve& curve, double max_slope, double center) {
    const auto [lo_it, hi_it] = std::minmax_element(curve.xp.begin(), curve.xp.end());
    const double reach = std::min(center - *lo_it, *hi_it - center);
    if (!(reach > 0.0)) {
        throw InvalidArgument("centre lies outside the sampled range of the curve");
    }
    constexpr int samples = 2000;
    double w = 0.0;
    for (int m = 1; m <= samples; ++m) {
        const double t = reach * m / samples;
        if (std::abs(curve.derivative(center + t, 1)) > max_slope ||
            std::abs(curve.derivative(center - t, 1)) > max_slope) {
            break;
        }
        w = t;
    }
    return w;
}

std::string to_string(CampanatoMode m) { return m == CampanatoMode::l2fit ? "l2fit" : "replacement"; }

nlohmann::json to_json(const CampanatoReport& r) {
    nlohmann::json j{{"S", r.S},
                     {"alpha", r.alpha},
                     {"K", r.K},
                     {"mode", to_string(r.mode)},
                     {"scale", r.scale},
                     {"sigma", r.sigma},
                     {"chi", r.chi},
                     {"P", {{"p0", r.p0}, {"p1", r.p1}, {"pn", r.pn}}}};
    j["fitted_decay"] = r.fitted_decay ? nlohmann::json(*r.fitted_decay) : nlohmann::json(nullptr);
    const auto mr = r.mean_ratio();
    j["mean_ratio"] = mr ? nlohmann::json(*mr) : nlohmann::json(nullptr);
    return j;
}

void write_csv(std::ostream& os, const CampanatoReport& r) {
    os << "k,scale,sigma,chi\n" << std::setprecision(17);
    for (std::size_t k = 0; k < r.sigma.size(); ++k) {
        os << k << ',' << r.scale[k] << ',' << r.sigma[k] << ',' << r.chi[k] << '\n';
    }
}

nlohmann::json to_json(const AnalyticityReport& r) {
    nlohmann::json j{{"requested_order", r.requested_order},
                     {"order", r.order},
                     {"window", r.window},
                     {"center", r.center},
                     {"coefficients", r.coefficients},
                     {"usable", r.usable},
                     {"residual_rms", r.residual_rms},
                     {"condition", r.condition},
                     {"warnings", r.warnings}};
    j["radius"] = std::isfinite(r.radius) ? nlohmann::json(r.radius) : nlohmann::json("inf");
    return j;
}

nlohmann::json to_json(const GlobalNormResult& r) {
    return {{"value", r.value}, {"centers", r.centers}, {"skipped_centers", r.skipped_centers}};
}

}  // namespace fbh
