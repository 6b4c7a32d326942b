#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "fbh/errors.hpp"
#include "fbh/harnack.hpp"
#include "fbh/majorant.hpp"
#include "fbh/obstacle.hpp"
#include "fbh/samples.hpp"
#include "fbh/straighten.hpp"
#include "fbh/weighted_solver.hpp"

namespace fbh::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Config access -----------------------------------------------------------

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            std::string known;
            for (auto a : allowed) {
                known += (known.empty() ? "" : ", ") + std::string(a);
            }
            throw ConfigError("unknown key '" + key + "' in " + where + " (expected one of: " + known + ")");
        }
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type: " + j.at(key).dump());
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

template <class E>
E choice(const json& j, const char* key, const std::vector<std::pair<std::string, E>>& options, E fallback,
         const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto name = get_or<std::string>(j, key, "", where);
    for (const auto& [n, e] : options) {
        if (n == name) {
            return e;
        }
    }
    std::string known;
    for (const auto& [n, e] : options) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw ConfigError(where + "." + key + " = '" + name + "' is not one of: " + known);
}

double positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(what + " must be positive");
    }
    return v;
}

GridPtr read_grid(const json& config, Shape shape, int nx, int ny) {
    const json& g = section(config, "grid");
    check_keys(g, {"nx", "ny"}, "grid");
    return build_grid(shape, get_or(g, "nx", nx, "grid"), get_or(g, "ny", ny, "grid"));
}

CgOptions read_solver(const json& config) {
    const json& s = section(config, "solver");
    check_keys(s, {"tolerance", "max_iterations", "jacobi"}, "solver");
    CgOptions o;
    o.relative_tolerance = positive(get_or(s, "tolerance", o.relative_tolerance, "solver"), "solver.tolerance");
    const long it = get_or(s, "max_iterations", 0L, "solver");
    if (it < 0) {
        throw ConfigError("solver.max_iterations must be non-negative");
    }
    o.max_iterations = static_cast<std::size_t>(it);
    o.jacobi = get_or(s, "jacobi", o.jacobi, "solver");
    return o;
}

ObstacleOptions read_psor(const json& config) {
    const json& p = section(config, "psor");
    check_keys(p, {"omega", "max_sweeps", "tolerance", "warm_start"}, "psor");
    ObstacleOptions o;
    o.omega = get_or(p, "omega", o.omega, "psor");
    if (!(o.omega > 0.0 && o.omega < 2.0)) {
        throw ConfigError("psor.omega must lie in (0, 2)");
    }
    const long sweeps = get_or(p, "max_sweeps", static_cast<long>(o.max_sweeps), "psor");
    if (sweeps < 1) {
        throw ConfigError("psor.max_sweeps must be at least 1");
    }
    o.max_sweeps = static_cast<std::size_t>(sweeps);
    o.tolerance = positive(get_or(p, "tolerance", o.tolerance, "psor"), "psor.tolerance");
    o.warm_start = get_or(p, "warm_start", o.warm_start, "psor");
    return o;
}

// Built-in closed forms ---------------------------------------------------

using Fn = std::function<double(double, double)>;

const std::map<std::string, Fn>& scalar_functions() {
    static const std::map<std::string, Fn> table{
        {"zero", [](double, double) { return 0.0; }},
        {"one", [](double, double) { return 1.0; }},
        {"xn", [](double, double y) { return y; }},
        {"degenerate_harmonic", [](double x, double y) { return 3 * x * x - y * y; }},
        {"harmonic_re_z2", [](double x, double y) { return x * x - y * y; }},
        {"harmonic_im_z2", [](double x, double y) { return 2 * x * y; }},
        {"harmonic_im_z3", [](double x, double y) { return 3 * x * x * y - y * y * y; }},
    };
    return table;
}

Fn named_function(const std::string& name, const std::string& where) {
    const auto& t = scalar_functions();
    if (auto it = t.find(name); it != t.end()) {
        return it->second;
    }
    std::string known;
    for (const auto& [n, f] : t) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw ConfigError(where + " = '" + name + "' is not a built-in function (" + known + ")");
}

CoefficientField named_coefficients(const std::string& name, const GridPtr& g) {
    if (name == "identity") {
        return CoefficientField::identity(g);
    }
    if (name == "perturbed") {
        return CoefficientField::from_function(
            g, [](double x, double y) { return Sym2{1.0 + 0.2 * x * x, 0.1 * x * y, 1.0 + 0.1 * y}; });
    }
    throw ConfigError("coefficients = '" + name + "' is not one of: identity, perturbed");
}

CurveModel read_curve(const json& config) {
    const json& c = section(config, "curve");
    check_keys(c, {"type", "amplitude", "frequency", "slope"}, "curve");
    const auto type = get_or<std::string>(c, "type", "flat", "curve");
    if (type == "flat") {
        return CurveModel::flat();
    }
    if (type == "sine") {
        return CurveModel::sine(get_or(c, "amplitude", 0.1, "curve"), get_or(c, "frequency", M_PI, "curve"));
    }
    if (type == "linear") {
        return CurveModel::linear(get_or(c, "slope", 0.0, "curve"));
    }
    throw ConfigError("curve.type = '" + type + "' is not one of: flat, sine, linear");
}

struct ObstacleBenchmark {
    std::string name;
    double a = 0.4;
    Fn data;
};

ObstacleBenchmark read_obstacle_benchmark(const json& config, const std::string& where) {
    ObstacleBenchmark b;
    b.name = get_or<std::string>(config, "benchmark", "radial", where);
    b.a = get_or(config, "a", 0.4, where);
    if (b.name == "radial") {
        if (!(b.a > 0.0 && b.a < 0.9)) {
            throw ConfigError("a must lie in (0, 0.9)");
        }
        const double a = b.a;
        b.data = [a](double x, double y) {
            const double r = std::hypot(x, y);
            return r <= a ? 0.0 : (r * r - a * a) / 4.0 - a * a / 2.0 * std::log(r / a);
        };
    } else if (b.name == "half_plane") {
        b.data = [](double, double y) { return y > 0.0 ? 0.5 * y * y : 0.0; };
    } else if (b.name == "zero") {
        b.data = [](double, double) { return 0.0; };
    } else {
        throw ConfigError("benchmark = '" + b.name + "' is not one of: radial, half_plane, zero");
    }
    return b;
}

Axis read_axis(const json& c, const std::string& where) {
    return choice<Axis>(c, "axis", {{"xn", Axis::xn}, {"x1", Axis::x1}}, Axis::xn, where);
}

Branch read_branch(const json& c, Branch fallback, const std::string& where) {
    return choice<Branch>(c, "branch", {{"unique", Branch::unique}, {"first", Branch::first}, {"last", Branch::last}},
                          fallback, where);
}

json grid_json(const Grid& g) { return {{"shape", to_string(g.shape())}, {"nx", g.nx()}, {"ny", g.ny()}}; }

// inf and nan are not JSON numbers.
json number(double v) {
    if (std::isnan(v)) {
        return nullptr;
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

// Artifacts ---------------------------------------------------------------

struct Context {
    const json& config;
    fs::path out;
    std::uint64_t seed;
    std::vector<std::string> artifacts;

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream f(out / name, std::ios::binary);
        f << text;
        if (!f) {
            throw std::runtime_error("cannot write " + (out / name).string());
        }
        artifacts.push_back(name);
    }
    template <class Writer>
    void write_csv(const std::string& name, Writer&& w) {
        std::ostringstream os;
        w(os);
        write_text(name, os.str());
    }
    void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }
};

// Commands ----------------------------------------------------------------

json cmd_solve_weighted(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "grid", "s", "planar", "coefficients", "exact", "boundary", "solver"},
               "config");
    auto g = read_grid(c, Shape::half, 64, 32);
    const double s = get_or(c, "s", 2.0, "config");
    const auto planar = choice<PlanarCondition>(
        c, "planar", {{"natural", PlanarCondition::natural}, {"dirichlet", PlanarCondition::dirichlet}},
        PlanarCondition::natural, "config");
    const auto coeff_name = get_or<std::string>(c, "coefficients", "identity", "config");
    std::optional<Fn> exact;
    if (c.contains("exact")) {
        exact = named_function(get_or<std::string>(c, "exact", "", "config"), "exact");
    }
    if (!c.contains("boundary") && !exact) {
        throw ConfigError("solve_weighted needs 'boundary' or 'exact' to define the Dirichlet data");
    }
    const Fn boundary =
        c.contains("boundary") ? named_function(get_or<std::string>(c, "boundary", "", "config"), "boundary") : *exact;
    const auto cg = read_solver(c);

    const auto op = assemble_weighted(named_coefficients(coeff_name, g), s, planar);
    const auto rhs = assemble_rhs(op, VectorField::zero(g));
    const auto res = solve(op, rhs, BoundaryData::from_function(*g, boundary), cg);

    json report{{"grid", grid_json(*g)},
                {"s", s},
                {"planar", planar == PlanarCondition::natural ? "natural" : "dirichlet"},
                {"coefficients", coeff_name},
                {"iterations", res.iterations},
                {"final_relative_residual", res.residual_history.empty() ? 0.0 : res.residual_history.back()},
                {"residual_norm", residual_norm(op, res.w, rhs)},
                {"scaled_residual", scaled_residual(op, res.w, rhs, true)}};
    if (exact) {
        double num = 0.0, den = 0.0;
        for (std::size_t n = 0; n < g->node_count(); ++n) {
            const double e = (*exact)(g->x1(g->i_of(n)), g->xn(g->j_of(n)));
            num += (res.w[n] - e) * (res.w[n] - e);
            den += e * e;
        }
        report["relative_l2_error"] = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    }
    ctx.write_csv("solution.csv", [&](std::ostream& os) { write_csv(os, res.w); });
    ctx.write_json("residual.json", {{"residual_history", res.residual_history},
                                     {"residual_norm", report["residual_norm"]},
                                     {"scaled_residual", report["scaled_residual"]}});
    return report;
}

json cmd_obstacle(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "grid", "benchmark", "a", "axis", "branch", "psor", "blowup", "write_solution"},
               "config");
    auto g = read_grid(c, Shape::full, 128, 128);
    const auto bench = read_obstacle_benchmark(c, "config");
    const auto axis = read_axis(c, "config");
    const auto branch = read_branch(c, Branch::unique, "config");
    const auto psor = read_psor(c);
    const json& bl = section(c, "blowup");
    check_keys(bl, {"points", "radii"}, "blowup");
    const auto points = get_or(bl, "points", std::vector<std::array<double, 2>>{}, "blowup");
    const auto radii = get_or(bl, "radii", std::vector<double>{0.5, 0.3, 0.2}, "blowup");

    const auto sol = solve_obstacle(CoefficientField::identity(g), BoundaryData::from_function(*g, bench.data), psor);
    json report{{"grid", grid_json(*g)}, {"benchmark", bench.name},       {"axis", to_string(axis)},
                {"branch", to_string(branch)}, {"psor", to_json(sol)}, {"free_boundary", nullptr}};
    if (bench.name == "radial") {
        report["a"] = bench.a;
    }
    try {
        const auto curve = extract_free_boundary(sol, axis, branch);
        report["free_boundary"] = to_json(curve);
        if (bench.name == "radial") {
            double worst = 0.0;
            for (std::size_t k = 0; k < curve.xp.size(); ++k) {
                worst = std::max(worst, std::abs(std::hypot(curve.xp[k], curve.gamma[k]) - bench.a));
            }
            report["radius_error_max"] = worst;
            report["radius_error_over_h"] = worst / std::max(g->h1(), g->h2());
        }
        ctx.write_csv("boundary.csv", [&](std::ostream& os) { write_csv(os, curve); });
    } catch (const NoFreeBoundary& e) {
        report["no_free_boundary"] = e.what();
    }
    json blowups = json::array();
    for (const auto& x0 : points) {
        blowups.push_back(to_json(blowup_check(sol, x0, radii)));
    }
    report["blowup"] = blowups;
    if (get_or(c, "write_solution", false, "config")) {
        ctx.write_csv("solution.csv", [&](std::ostream& os) { write_csv(os, sol.U); });
    }
    return report;
}

struct Pair {
    Fn u1, u2;
    std::optional<Fn> w;  // exact quotient on a flat boundary
};

Pair named_pair(const std::string& name) {
    if (name == "harmonic_pair") {
        return {[](double x, double y) { return 2 * x * y; }, [](double, double y) { return y; },
                [](double x, double) { return 2 * x; }};
    }
    if (name == "smooth_pair") {
        return {[](double x, double y) { return y + 0.3 * (3 * x * x * y - y * y * y); },
                [](double, double y) { return y; },
                [](double x, double y) { return 1.0 + 0.3 * (3 * x * x - y * y); }};
    }
    if (name == "sign_change") {
        return {[](double, double y) { return y; }, [](double x, double y) { return y * (x + 0.2); }, std::nullopt};
    }
    throw ConfigError("pair = '" + name + "' is not one of: harmonic_pair, smooth_pair, sign_change");
}

json cmd_harnack(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "grid", "pair", "curve", "floor_tolerance", "solver", "campanato"}, "config");
    auto g = read_grid(c, Shape::half, 64, 32);
    const auto pair_name = get_or<std::string>(c, "pair", "harmonic_pair", "config");
    const auto pair = named_pair(pair_name);
    const auto curve = read_curve(c);
    const bool flat = section(c, "curve").value("type", "flat") == "flat";
    const double floor_tol = positive(get_or(c, "floor_tolerance", 1e-3, "config"), "floor_tolerance");
    const auto cg = read_solver(c);
    const json& cs = section(c, "campanato");
    check_keys(cs, {"alpha", "S", "K", "mode"}, "campanato");
    const double alpha = get_or(cs, "alpha", 0.5, "campanato");
    const double S = get_or(cs, "S", 0.5, "campanato");
    const int K = get_or(cs, "K", max_campanato_scales(*g, S > 0.0 ? S : 0.5), "campanato");
    const auto mode = choice<CampanatoMode>(
        cs, "mode", {{"l2fit", CampanatoMode::l2fit}, {"replacement", CampanatoMode::replacement}},
        CampanatoMode::l2fit, "campanato");

    const MatrixFunction b = [](double, double) { return Sym2{}; };
    const auto A = transform_coefficients(b, curve, g);
    const auto op = assemble_elliptic(A);
    const auto rhs = assemble_rhs(op, VectorField::zero(g));
    const auto u1 = solve(op, rhs, BoundaryData::from_function(*g, pair.u1), cg).w;
    const auto u2 = solve(op, rhs, BoundaryData::from_function(*g, pair.u2), cg).w;

    json report{{"grid", grid_json(*g)}, {"pair", pair_name}, {"floor_tolerance", floor_tol}};
    report["hopf_floor"] = hopf_floor(u2);
    const auto w = ratio(u1, u2, floor_tol);
    const auto fields = build_ratio_system({u1, u2}, curve, b, [](double, double) { return std::array<Sym2, 2>{}; }, 1);
    const auto scan = campanato_scan(w, fields.F, alpha, S, K, mode, &fields.Atilde);
    report["ratio_residual"] = ratio_residual(w, u2, A, VectorField::zero(g), VectorField::zero(g));
    report["campanato"] = to_json(scan);
    if (pair.w && flat) {
        double worst = 0.0;
        for (std::size_t n = 0; n < g->node_count(); ++n) {
            worst = std::max(worst, std::abs(w[n] - (*pair.w)(g->x1(g->i_of(n)), g->xn(g->j_of(n)))));
        }
        report["w_max_error"] = worst;
    } else {
        report["w_max_error"] = nullptr;
    }
    ctx.write_csv("ratio.csv", [&](std::ostream& os) { write_csv(os, w); });
    ctx.write_csv("campanato.csv", [&](std::ostream& os) { write_csv(os, scan); });
    return report;
}

json cmd_analytic_scan(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "grid", "benchmark", "a", "axis", "branch", "Kmax", "window", "psor"},
               "config");
    auto g = read_grid(c, Shape::full, 128, 128);
    const auto bench = read_obstacle_benchmark(c, "config");
    const auto axis = read_axis(c, "config");
    const auto branch = read_branch(c, Branch::last, "config");
    const int Kmax = get_or(c, "Kmax", 4, "config");
    if (Kmax < 1) {
        throw ConfigError("Kmax must be at least 1");
    }
    const auto psor = read_psor(c);

    const auto sol = solve_obstacle(CoefficientField::identity(g), BoundaryData::from_function(*g, bench.data), psor);
    const auto curve = extract_free_boundary(sol, axis, branch);
    double window = 0.0;
    std::string window_rule;
    if (!c.contains("window") || (c.at("window").is_string() && c.at("window") == "slope_limited")) {
        window = slope_limited_window(curve);
        window_rule = "slope_limited";
    } else {
        window = positive(get_or(c, "window", 0.0, "config"), "window");
        window_rule = "fixed";
    }
    const auto rep = analyticity_scan(curve.xp, curve.gamma, Kmax, window);
    json report{{"grid", grid_json(*g)},     {"benchmark", bench.name}, {"axis", to_string(axis)},
                {"branch", to_string(branch)}, {"window_rule", window_rule}, {"psor", to_json(sol)},
                {"analyticity", to_json(rep)}};
    if (bench.name == "radial") {
        report["a"] = bench.a;
    }
    ctx.write_csv("boundary.csv", [&](std::ostream& os) { write_csv(os, curve); });
    ctx.write_csv("taylor.csv", [&](std::ostream& os) {
        os << "k,c_k,usable\n" << std::setprecision(17);
        for (std::size_t k = 0; k < rep.coefficients.size(); ++k) {
            os << k << ',' << rep.coefficients[k] << ',' << (rep.usable[k] ? 1 : 0) << '\n';
        }
    });
    return report;
}

template <class T>
json radii(const majorant::Series<T>& f) {
    json r;
    for (auto m : {majorant::RadiusMethod::root, majorant::RadiusMethod::ratio}) {
        try {
            r[majorant::to_string(m)] = number(majorant::radius_estimate(f, m));
        } catch (const InvalidArgument& e) {
            r[majorant::to_string(m)] = nullptr;
            r[majorant::to_string(m) + "_note"] = e.what();
        }
    }
    return r;
}

template <class T>
json run_majorant(Context& ctx, const majorant::Expr& M, const majorant::Expr& N, const majorant::Rational& pi0,
                  const majorant::Rational& om0, int order) {
    T p0, o0;
    if constexpr (std::is_same_v<T, double>) {
        p0 = pi0.convert_to<double>();
        o0 = om0.convert_to<double>();
    } else {
        p0 = pi0;
        o0 = om0;
    }
    const auto [pi, om] = majorant::ode_solve<T>(M, N, p0, o0, order);
    ctx.write_csv("pi.csv", [&](std::ostream& os) { majorant::write_csv(os, pi); });
    ctx.write_csv("omega.csv", [&](std::ostream& os) { majorant::write_csv(os, om); });
    return {{"Pi", majorant::to_json(pi)},
            {"Omega", majorant::to_json(om)},
            {"radius", {{"Pi", radii(pi)}, {"Omega", radii(om)}}}};
}

json cmd_majorant_ode(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "M", "N", "Pi0", "Omega0", "order", "arithmetic"}, "config");
    if (!c.contains("M")) {
        throw ConfigError("majorant_ode needs the right-hand side 'M' of Omega'");
    }
    const auto M = majorant::parse_expr(c.at("M"));
    const auto N = majorant::parse_expr(c.contains("N") ? c.at("N") : json{{"const", 0}});
    const auto pi0 = majorant::parse_rational(c.value("Pi0", json(0)));
    const auto om0 = majorant::parse_rational(c.value("Omega0", json(0)));
    const int order = get_or(c, "order", 32, "config");
    const auto arithmetic = get_or<std::string>(c, "arithmetic", "rational", "config");
    json report{{"order", order}, {"arithmetic", arithmetic}, {"M", majorant::to_json(M)}, {"N", majorant::to_json(N)},
                {"Pi0", pi0.str()}, {"Omega0", om0.str()}};
    json solved;
    if (arithmetic == "rational") {
        solved = run_majorant<majorant::Rational>(ctx, M, N, pi0, om0, order);
    } else if (arithmetic == "double") {
        solved = run_majorant<double>(ctx, M, N, pi0, om0, order);
    } else {
        throw ConfigError("arithmetic = '" + arithmetic + "' is not one of: rational, double");
    }
    report.update(solved);
    return report;
}

json cmd_poincare(Context& ctx) {
    const json& c = ctx.config;
    check_keys(c, {"command", "output", "grid", "samples", "bumps", "bound", "seed"}, "config");
    auto g = read_grid(c, Shape::half, 64, 32);
    const int samples = get_or(c, "samples", 100, "config");
    const int bumps = get_or(c, "bumps", 3, "config");
    const double bound = positive(get_or(c, "bound", 4.2, "config"), "bound");
    if (samples < 1 || bumps < 1) {
        throw ConfigError("samples and bumps must be at least 1");
    }
    std::mt19937_64 rng(ctx.seed);
    std::vector<double> ratios;
    while (static_cast<int>(ratios.size()) < samples) {
        if (auto r = poincare_ratio(random_bump_sum(g, rng, bumps))) {
            ratios.push_back(*r);
        }
    }
    const double worst = *std::max_element(ratios.begin(), ratios.end());
    const auto violations = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r > bound; });
    ctx.write_csv("ratios.csv", [&](std::ostream& os) {
        os << "sample,ratio\n" << std::setprecision(17);
        for (std::size_t k = 0; k < ratios.size(); ++k) {
            os << k << ',' << ratios[k] << '\n';
        }
    });
    if (violations > 0) {
        throw HypothesisViolation(std::to_string(violations) + " sample(s) exceed the Poincare bound", worst);
    }
    return {{"grid", grid_json(*g)}, {"samples", samples}, {"bumps", bumps}, {"seed", ctx.seed},
            {"bound", bound},        {"max_ratio", worst}, {"violations", violations}};
}

const std::map<std::string, std::function<json(Context&)>>& commands() {
    static const std::map<std::string, std::function<json(Context&)>> table{
        {"solve_weighted", cmd_solve_weighted}, {"obstacle", cmd_obstacle},
        {"harnack", cmd_harnack},               {"analytic_scan", cmd_analytic_scan},
        {"majorant_ode", cmd_majorant_ode},     {"poincare", cmd_poincare},
    };
    return table;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"kind", kind}, {"message", message}};
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

int run(const json& config, const Options& options, std::ostream& log, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    const std::string started_utc = utc_now();
    std::string command = "?";
    fs::path out = options.out.value_or("fbh_out");
    std::uint64_t seed = options.seed.value_or(0);
    json report;
    json error;
    int code = ok;
    std::vector<std::string> artifacts;
    try {
        if (!config.is_object()) {
            throw ConfigError("the configuration must be a JSON object");
        }
        if (!options.out && config.contains("output")) {
            out = get_or<std::string>(config, "output", "", "config");
        }
        if (!options.seed && config.contains("seed")) {
            seed = get_or<std::uint64_t>(config, "seed", 0, "config");
        }
        command = get_or<std::string>(config, "command", "", "config");
        const auto it = commands().find(command);
        if (it == commands().end()) {
            std::string known;
            for (const auto& [n, f] : commands()) {
                known += (known.empty() ? "" : ", ") + n;
            }
            throw ConfigError("unknown command '" + command + "' (expected one of: " + known + ")");
        }
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) {
            throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
        }
        Context ctx{config, out, seed, {}};
        try {
            report = it->second(ctx);
        } catch (...) {
            artifacts = ctx.artifacts;
            throw;
        }
        artifacts = ctx.artifacts;
    } catch (const ConfigError& e) {
        code = config_error;
        error = error_json("config", e.what());
    } catch (const InvalidArgument& e) {
        code = config_error;
        error = error_json("invalid_argument", e.what());
    } catch (const json::exception& e) {
        code = config_error;
        error = error_json("config", e.what());
    } catch (const HypothesisViolation& e) {
        code = hypothesis_violation;
        error = error_json("hypothesis_violation", e.what());
        error["value"] = number(e.value);
    } catch (const InfiniteCoefficient& e) {
        code = numerical_failure;
        error = error_json("infinite_coefficient", e.what());
        error["order"] = e.order;
    } catch (const SolverError& e) {
        code = numerical_failure;
        error = error_json("solver", e.what());
        error["iterations"] = e.residual_history.size();
        error["last_residual"] = e.residual_history.empty() ? json(nullptr) : number(e.residual_history.back());
    } catch (const NonGraph& e) {
        code = numerical_failure;
        error = error_json("non_graph", e.what());
        error["columns"] = e.columns;
    } catch (const NoFreeBoundary& e) {
        code = numerical_failure;
        error = error_json("no_free_boundary", e.what());
    } catch (const std::exception& e) {
        code = numerical_failure;
        error = error_json("runtime", e.what());
    }

    if (code != ok) {
        err << "fbh " << command << ": " << error.at("message").get<std::string>() << '\n';
        report = json{{"error", error}};
    }
    report["command"] = command;
    report["status"] = code == ok ? "ok" : "error";
    report["exit_code"] = code;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (fs::is_directory(out, ec)) {
        std::ofstream(out / "report.json", std::ios::binary) << report.dump(2) << '\n';
        artifacts.push_back("report.json");
        const json meta{{"tool", "fbh"},           {"version", kVersion},         {"command", command},
                        {"exit_code", code},       {"seed", seed},                {"started_utc", started_utc},
                        {"elapsed_seconds", elapsed}, {"artifacts", artifacts}};
        std::ofstream(out / "meta.json", std::ios::binary) << meta.dump(2) << '\n';
    }
    if (!options.quiet) {
        log << "fbh " << command << ": " << (code == ok ? "ok" : "error") << " (exit " << code << ", "
            << std::fixed << std::setprecision(2) << elapsed << " s) -> " << out.string() << '\n';
    }
    return code;
}

int main(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
    CLI::App app{"Free-boundary and boundary-Harnack numerical pipelines"};
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    auto* out_opt = app.add_option("--out", out, "output directory (overrides the config's \"output\")");
    auto* seed_opt = app.add_option("--seed", seed, "seed for randomized commands");
    app.add_flag("--quiet", quiet, "suppress the summary line");
    std::vector<std::string> rest(args.rbegin(), args.rend());
    if (!rest.empty()) {
        rest.pop_back();  // program name
    }
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        log << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "fbh: " << e.what() << '\n' << app.help();
        return config_error;
    }
    json config;
    {
        std::ifstream f(config_path);
        if (!f) {
            err << "fbh: cannot open config " << config_path << '\n';
            return config_error;
        }
        try {
            config = json::parse(f);
        } catch (const json::parse_error& e) {
            err << "fbh: malformed config " << config_path << ": " << e.what() << '\n';
            return config_error;
        }
    }
    Options options;
    options.quiet = quiet;
    if (*out_opt) {
        options.out = out;
    }
    if (*seed_opt) {
        options.seed = seed;
    }
    return run(config, options, log, err);
}

}  // namespace fbh::cli
