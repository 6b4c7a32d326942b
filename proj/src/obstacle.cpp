#include "fbh/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>

#include <Eigen/Dense>

#include "fbh/errors.hpp"

namespace fbh {

namespace {

void require_full(const Grid& g) {
    if (g.shape() != Shape::full) {
        throw InvalidArgument("the obstacle problem is posed on a full grid");
    }
}

// max_i |min(U_i, (K U + m)_i / m_i)| over interior nodes.
double lcp_residual(const Grid& g, const CsrMatrix& k, std::span<const double> masses, std::span<const double> u) {
    double worst = 0.0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (g.tag(n) != NodeTag::interior) {
            continue;
        }
        const auto cols = k.row_cols(n);
        const auto vals = k.row_values(n);
        double ku = 0.0;
        for (std::size_t p = 0; p < cols.size(); ++p) {
            ku += vals[p] * u[cols[p]];
        }
        worst = std::max(worst, std::abs(std::min(u[n], (ku + masses[n]) / masses[n])));
    }
    return worst;
}

}  // namespace

double complementarity_residual(const CoefficientField& a, const GridFunction& U) {
    require_full(a.grid());
    if (!(U.grid() == a.grid())) {
        throw InvalidArgument("complementarity_residual: grid mismatch");
    }
    const auto k = assemble_nodal_stiffness(a.grid(), a.entries(), 0.0);
    return lcp_residual(a.grid(), k, nodal_masses(a.grid(), 0.0), U.values());
}

ObstacleSolution solve_obstacle(const CoefficientField& a, const BoundaryData& bd, const ObstacleOptions& options) {
    const Grid& g = a.grid();
    require_full(g);
    if (bd.values.size() != g.node_count()) {
        throw InvalidArgument("boundary data size does not match the grid");
    }
    if (!(options.omega > 0.0 && options.omega < 2.0)) {
        throw InvalidArgument("relaxation factor must lie in (0, 2)");
    }
    std::vector<double> u(g.node_count(), 0.0);
    std::size_t coarse_sweeps = 0;
    if (options.warm_start && g.nx() % 2 == 0 && g.ny() % 2 == 0 && g.nx() >= 32 && g.ny() >= 32) {
        auto cg = build_grid(Shape::full, g.nx() / 2, g.ny() / 2);
        std::vector<Sym2> ce(cg->node_count());
        std::vector<double> cb(cg->node_count());
        for (int j = 0; j <= cg->ny(); ++j) {
            for (int i = 0; i <= cg->nx(); ++i) {
                ce[cg->node(i, j)] = a[g.node(2 * i, 2 * j)];
                cb[cg->node(i, j)] = bd.values[g.node(2 * i, 2 * j)];
            }
        }
        ObstacleOptions co = options;
        const auto coarse = solve_obstacle(CoefficientField(cg, std::move(ce), a.lambda(), a.Lambda()),
                                           BoundaryData{std::move(cb)}, co);
        coarse_sweeps = coarse.iterations + coarse.coarse_sweeps;
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            u[n] = std::max(0.0, coarse.U.interpolate(g.x1(g.i_of(n)), g.xn(g.j_of(n))));
        }
    }
    std::vector<std::size_t> interior;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (g.tag(n) == NodeTag::interior) {
            interior.push_back(n);
        } else {
            if (!std::isfinite(bd.values[n]) || bd.values[n] < 0.0) {
                throw InvalidArgument("obstacle boundary data must be finite and non-negative");
            }
            u[n] = bd.values[n];
        }
    }
    const auto k = assemble_nodal_stiffness(g, a.entries(), 0.0);
    const auto masses = nodal_masses(g, 0.0);
    const auto diag = k.diagonal();
    const double omega = options.omega;

    std::vector<double> history;
    std::size_t sweeps = 0;
    double res = lcp_residual(g, k, masses, u);
    constexpr std::size_t check_every = 10;
    while (res > options.tolerance) {
        if (sweeps >= options.max_sweeps) {
            history.push_back(res);
            throw SolverError("projected SOR did not converge in " + std::to_string(sweeps) +
                                  " sweeps (complementarity residual " + std::to_string(res) + ")",
                              std::move(history));
        }
        for (std::size_t n : interior) {
            const auto cols = k.row_cols(n);
            const auto vals = k.row_values(n);
            double ku = 0.0;
            for (std::size_t p = 0; p < cols.size(); ++p) {
                ku += vals[p] * u[cols[p]];
            }
            u[n] = std::max(0.0, u[n] - omega * (ku + masses[n]) / diag[n]);
        }
        ++sweeps;
        if (sweeps % check_every == 0 || sweeps >= options.max_sweeps) {
            res = lcp_residual(g, k, masses, u);
            if (sweeps % 100 == 0) {
                history.push_back(res);
            }
        }
    }
    const double umax = *std::max_element(u.begin(), u.end());
    const double threshold = 1e-10 * umax;
    std::vector<bool> active(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        active[n] = u[n] > threshold;
    }
    return ObstacleSolution{GridFunction(a.grid_ptr(), std::move(u)), std::move(active), threshold, sweeps, coarse_sweeps,
                           res};
}

std::array<double, 2> FreeBoundaryCurve::point(double x) const {
    return axis == Axis::xn ? std::array<double, 2>{x, spline(x)} : std::array<double, 2>{spline(x), x};
}

namespace {

// Zero of sqrt(U) along a column from a least-squares quadratic through the
// nodes 2..5 steps past the first positive node `pos`, in units of the step.
// The first nodes off the contact set carry most of the discretisation error.
template <class Value>
std::optional<double> sqrt_quadratic_root(const Value& value, int c, int pos, int step, int length) {
    constexpr int first = 2, count = 4;
    const int last = pos + step * (first + count - 1);
    if (last < 0 || last > length) {
        return std::nullopt;
    }
    for (int k = 0; k < first + count; ++k) {
        if (!(value(c, pos + step * k) > 0.0)) {
            return std::nullopt;
        }
    }
    Eigen::Matrix<double, count, 3> v;
    Eigen::Matrix<double, count, 1> b;
    for (int k = 0; k < count; ++k) {
        const double tau = first + k;
        v.row(k) << 1.0, tau, tau * tau;
        b(k) = std::sqrt(value(c, pos + step * (first + k)));
    }
    const Eigen::Vector3d q = v.colPivHouseholderQr().solve(b);
    if (!(q(1) > 0.0)) {
        return std::nullopt;
    }
    double r = -0.5;  // the contact cell's midpoint picks the near root
    for (int it = 0; it < 20; ++it) {
        const double d = q(1) + 2.0 * q(2) * r;
        if (!(std::abs(d) > 0.0)) {
            return std::nullopt;
        }
        r -= (q(0) + (q(1) + q(2) * r) * r) / d;
    }
    if (!std::isfinite(r)) {
        return std::nullopt;
    }
    return r;
}

}  // namespace

FreeBoundaryCurve extract_free_boundary(const ObstacleSolution& sol, Axis axis, Branch branch) {
    const Grid& g = sol.U.grid();
    const auto n_active = static_cast<std::size_t>(std::count(sol.active.begin(), sol.active.end(), true));
    if (n_active == 0 || n_active == g.node_count()) {
        throw NoFreeBoundary(n_active == 0 ? "the positivity set is empty" : "the positivity set is the whole grid");
    }
    const bool along_xn = axis == Axis::xn;
    const int columns = along_xn ? g.nx() : g.ny();
    const int length = along_xn ? g.ny() : g.nx();
    auto value = [&](int c, int s) { return along_xn ? sol.U.at(c, s) : sol.U.at(s, c); };
    auto coord = [&](int s) { return along_xn ? g.xn(s) : g.x1(s); };
    auto column_coord = [&](int c) { return along_xn ? g.x1(c) : g.xn(c); };
    const double thr = sol.threshold;

    FreeBoundaryCurve curve{axis, {}, {}, {}, {}};
    std::vector<double> offending;
    for (int c = 0; c <= columns; ++c) {
        std::vector<int> crossings;
        for (int s = 0; s < length; ++s) {
            if ((value(c, s) > thr) != (value(c, s + 1) > thr)) {
                crossings.push_back(s);
            }
        }
        if (crossings.empty()) {
            continue;
        }
        if (crossings.size() > 1) {
            if (branch == Branch::unique) {
                offending.push_back(column_coord(c));
                continue;
            }
            curve.multi_crossings.push_back(column_coord(c));
        }
        const int s = branch == Branch::first ? crossings.front() : crossings.back();
        const bool up = value(c, s + 1) > thr;  // positive side above
        const int zero = up ? s : s + 1;
        const int pos = up ? s + 1 : s;
        const int step = up ? 1 : -1;
        const int next = pos + step;
        double t;
        if (const auto r = sqrt_quadratic_root(value, c, pos, step, length)) {
            t = coord(pos) + *r * (coord(next) - coord(pos));
        } else if (next >= 0 && next <= length && value(c, next) > value(c, pos)) {
            const double s1 = std::sqrt(value(c, pos));
            const double s2 = std::sqrt(value(c, next));
            t = coord(pos) - s1 * (coord(next) - coord(pos)) / (s2 - s1);
        } else {
            const double v0 = value(c, zero) - thr;
            const double v1 = value(c, pos) - thr;
            t = coord(zero) + (coord(pos) - coord(zero)) * v0 / (v0 - v1);
        }
        // The discrete contact set may overshoot by a node, so the zero is
        // allowed one cell into it.
        const double reach = 2.0 * coord(zero) - coord(pos);
        const double lo = std::min(reach, coord(pos));
        const double hi = std::max(reach, coord(pos));
        curve.xp.push_back(column_coord(c));
        curve.gamma.push_back(std::clamp(t, lo, hi));
    }
    if (!offending.empty()) {
        throw NonGraph(std::to_string(offending.size()) + " column(s) cross the free boundary more than once",
                       std::move(offending));
    }
    if (curve.xp.size() < 2) {
        throw NoFreeBoundary("fewer than two grid columns cross the free boundary");
    }
    curve.spline = CubicSpline(curve.xp, curve.gamma);
    return curve;
}

namespace {

const std::vector<std::array<double, 2>>& unit_disc_stencil() {
    static const std::vector<std::array<double, 2>> pts = [] {
        std::vector<std::array<double, 2>> p;
        constexpr int m = 16;
        for (int a = -m; a <= m; ++a) {
            for (int b = -m; b <= m; ++b) {
                if (a * a + b * b <= m * m) {
                    p.push_back({static_cast<double>(a) / m, static_cast<double>(b) / m});
                }
            }
        }
        return p;
    }();
    return pts;
}

struct FitValue {
    double k, residual;
};

FitValue fit_for_angle(const std::vector<std::array<double, 2>>& z, const std::vector<double>& u, double unorm,
                       double theta) {
    const double e1 = std::sin(theta), en = std::cos(theta);
    double qu = 0.0, qq = 0.0;
    std::vector<double> q(z.size());
    for (std::size_t p = 0; p < z.size(); ++p) {
        const double d = std::max(0.0, z[p][0] * e1 + z[p][1] * en);
        q[p] = 0.5 * d * d;
        qu += q[p] * u[p];
        qq += q[p] * q[p];
    }
    const double k = qq > 0.0 ? std::max(0.0, qu / qq) : 0.0;
    double rr = 0.0;
    for (std::size_t p = 0; p < z.size(); ++p) {
        rr += (u[p] - k * q[p]) * (u[p] - k * q[p]);
    }
    return {k, std::sqrt(rr) / unorm};
}

// Direction of grad U at the active node nearest to x0, as an angle with
// e = (sin theta, cos theta).
std::optional<double> initial_angle(const ObstacleSolution& sol, std::array<double, 2> x0) {
    const Grid& g = sol.U.grid();
    double best = 1e300;
    int bi = -1, bj = -1;
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            if (!sol.active[g.node(i, j)]) {
                continue;
            }
            const double d = std::hypot(g.x1(i) - x0[0], g.xn(j) - x0[1]);
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    }
    if (bi < 0) {
        return std::nullopt;
    }
    auto diff = [&](int i0, int j0, int i1, int j1, double h) { return (sol.U.at(i1, j1) - sol.U.at(i0, j0)) / h; };
    const int il = std::max(bi - 1, 0), ir = std::min(bi + 1, g.nx());
    const int jl = std::max(bj - 1, 0), jr = std::min(bj + 1, g.ny());
    const double g1 = diff(il, bj, ir, bj, (ir - il) * g.h1());
    const double gn = diff(bi, jl, bi, jr, (jr - jl) * g.h2());
    if (g1 == 0.0 && gn == 0.0) {
        return std::nullopt;
    }
    return std::atan2(g1, gn);
}

}  // namespace

RegularPointReport blowup_check(const ObstacleSolution& sol, std::array<double, 2> x0, const std::vector<double>& radii) {
    const Grid& g = sol.U.grid();
    if (radii.empty()) {
        throw InvalidArgument("blowup_check needs at least one radius");
    }
    for (std::size_t p = 0; p < radii.size(); ++p) {
        if (!(radii[p] > 0.0) || (p > 0 && !(radii[p] < radii[p - 1]))) {
            throw InvalidArgument("radii must be positive and strictly decreasing");
        }
    }
    RegularPointReport rep{x0, false, {}, Verdict::inconclusive};
    bool seen_pos = false, seen_zero = false;
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            if (std::abs(g.x1(i) - x0[0]) <= 2 * g.h1() + 1e-12 && std::abs(g.xn(j) - x0[1]) <= 2 * g.h2() + 1e-12) {
                (sol.active[g.node(i, j)] ? seen_pos : seen_zero) = true;
            }
        }
    }
    rep.near_free_boundary = seen_pos && seen_zero;

    const auto& z = unit_disc_stencil();
    const double theta0 = initial_angle(sol, x0).value_or(0.0);
    for (double r : radii) {
        BlowupFit fit{r, false, 0.0, {std::sin(theta0), std::cos(theta0)}, 1.0};
        const double lo = g.xn_min();
        if (x0[0] - r < -1.0 - 1e-12 || x0[0] + r > 1.0 + 1e-12 || x0[1] - r < lo - 1e-12 || x0[1] + r > 1.0 + 1e-12) {
            fit.skipped = true;
            rep.fits.push_back(fit);
            continue;
        }
        std::vector<double> u(z.size());
        double unorm = 0.0;
        for (std::size_t p = 0; p < z.size(); ++p) {
            const double x = std::clamp(x0[0] + r * z[p][0], -1.0, 1.0);
            const double y = std::clamp(x0[1] + r * z[p][1], lo, 1.0);
            u[p] = sol.U.interpolate(x, y) / (r * r);
            unorm += u[p] * u[p];
        }
        unorm = std::sqrt(unorm);
        if (unorm == 0.0) {
            rep.fits.push_back(fit);
            continue;
        }
        // Variable projection: k is linear given theta; search theta from the
        // gradient guess and a coarse scan, then refine by golden section.
        double best_theta = theta0;
        FitValue best = fit_for_angle(z, u, unorm, theta0);
        constexpr int scan = 72;
        const double step = 2.0 * M_PI / scan;
        for (int s = 0; s < scan; ++s) {
            const double th = -M_PI + s * step;
            const auto v = fit_for_angle(z, u, unorm, th);
            if (v.residual < best.residual) {
                best = v;
                best_theta = th;
            }
        }
        double a = best_theta - step, b = best_theta + step;
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = fit_for_angle(z, u, unorm, c).residual, fd = fit_for_angle(z, u, unorm, d).residual;
        for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = fit_for_angle(z, u, unorm, c).residual;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = fit_for_angle(z, u, unorm, d).residual;
            }
        }
        const double th = 0.5 * (a + b);
        const auto v = fit_for_angle(z, u, unorm, th);
        if (v.residual <= best.residual) {
            best = v;
            best_theta = th;
        }
        fit.k = best.k;
        fit.residual = best.residual;
        fit.e = {std::sin(best_theta), std::cos(best_theta)};
        rep.fits.push_back(fit);
    }

    const BlowupFit* prev = nullptr;
    bool regular = true;
    for (const auto& f : rep.fits) {
        if (f.skipped) {
            continue;
        }
        if (!(f.k > 0.0) || (prev && f.residual > prev->residual + 1e-3)) {
            regular = false;
        }
        prev = &f;
    }
    if (regular && prev && prev->residual < 1e-2) {
        rep.verdict = Verdict::regular;
    }
    return rep;
}

std::string to_string(Axis a) { return a == Axis::xn ? "xn" : "x1"; }

std::string to_string(Branch b) {
    switch (b) {
        case Branch::unique:
            return "unique";
        case Branch::first:
            return "first";
        default:
            return "last";
    }
}

std::string to_string(Verdict v) { return v == Verdict::regular ? "regular" : "inconclusive"; }

void write_csv(std::ostream& os, const FreeBoundaryCurve& c) {
    os << "x',gamma,dgamma,d2gamma\n" << std::setprecision(17);
    for (std::size_t p = 0; p < c.xp.size(); ++p) {
        os << c.xp[p] << ',' << c.gamma[p] << ',' << c.derivative(c.xp[p], 1) << ',' << c.derivative(c.xp[p], 2)
           << '\n';
    }
}

nlohmann::json to_json(const FreeBoundaryCurve& c) {
    return {{"axis", to_string(c.axis)}, {"x_prime", c.xp}, {"gamma", c.gamma}, {"multi_crossings", c.multi_crossings}};
}

nlohmann::json to_json(const RegularPointReport& r) {
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : r.fits) {
        fits.push_back({{"r", f.r}, {"skipped", f.skipped}, {"k", f.k}, {"e", f.e}, {"residual", f.residual}});
    }
    return {{"x0", r.x0}, {"near_free_boundary", r.near_free_boundary}, {"fits", fits},
            {"verdict", to_string(r.verdict)}};
}

nlohmann::json to_json(const ObstacleSolution& s) {
    const auto n_active = std::count(s.active.begin(), s.active.end(), true);
    return {{"iterations", s.iterations},
            {"coarse_sweeps", s.coarse_sweeps},
            {"complementarity_residual", s.complementarity_residual},
            {"threshold", s.threshold},
            {"active_nodes", n_active}};
}

}  // namespace fbh
