#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fbh/errors.hpp"
#include "fbh/samples.hpp"
#include "fbh/stats.hpp"
#include "fbh/weighted_solver.hpp"

using namespace fbh;

namespace {

using Fn = std::function<double(double, double)>;

double rel_l2_error(const GridFunction& w, const Fn& exact) {
    double num = 0.0, den = 0.0;
    const Grid& g = w.grid();
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double e = exact(g.x1(g.i_of(n)), g.xn(g.j_of(n)));
        num += (w[n] - e) * (w[n] - e);
        den += e * e;
    }
    return std::sqrt(num / den);
}

SolveResult solve_homogeneous(const GridPtr& g, const Fn& data, double s = 2.0) {
    auto op = assemble_weighted(CoefficientField::identity(g), s);
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    return solve(op, rhs, BoundaryData::from_function(*g, data));
}

}  // namespace

TEST(Assemble, FivePointLaplacianWhenUnweighted) {
    auto g = build_grid(Shape::half, 8, 4);  // h1 = h2 = 0.25
    auto op = assemble_weighted(CoefficientField::identity(g), 0.0);
    const auto& k = op.nodal_stiffness();
    const std::size_t c = g->node(4, 2);
    EXPECT_NEAR(k.coeff(c, c), 4.0, 1e-14);
    for (auto nb : {g->node(3, 2), g->node(5, 2), g->node(4, 1), g->node(4, 3)}) {
        EXPECT_NEAR(k.coeff(c, nb), -1.0, 1e-14);
    }
    EXPECT_EQ(k.row_cols(c).size(), 5u);
}

TEST(Assemble, SymmetricDegenerate) {
    auto g = build_grid(Shape::half, 4, 4);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    EXPECT_LE(op.stiffness().symmetry_defect(), 1e-12);
    EXPECT_LE(op.nodal_stiffness().symmetry_defect(), 1e-12);
}

TEST(Assemble, MixedTermsGiveNinePointSymmetric) {
    auto g = build_grid(Shape::half, 6, 6);
    auto a = CoefficientField::from_function(g, [](double x, double y) { return Sym2{2.0 + x * y, 0.4, 1.5}; });
    auto op = assemble_weighted(a, 2.0);
    EXPECT_LE(op.nodal_stiffness().symmetry_defect(), 1e-12);
    EXPECT_EQ(op.nodal_stiffness().row_cols(g->node(3, 3)).size(), 9u);
}

TEST(Assemble, LinearInX1IsExact) {
    auto g = build_grid(Shape::half, 10, 7);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    GridFunction w(g, [](double x, double) { return x; });
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    for (double r : residual_vector(op, w, rhs)) {
        EXPECT_LE(std::abs(r), 1e-12);
    }
}

TEST(Assemble, RejectsFullGridAndBadWeight) {
    auto full = build_grid(Shape::full, 4, 4);
    EXPECT_THROW((void)assemble_weighted(CoefficientField::identity(full), 2.0), InvalidArgument);
    auto half = build_grid(Shape::half, 4, 4);
    EXPECT_THROW((void)assemble_weighted(CoefficientField::identity(half), -0.5), InvalidArgument);
}

TEST(Assemble, RejectsEllipticityViolation) {
    auto g = build_grid(Shape::half, 4, 4);
    std::vector<Sym2> e(g->node_count(), Sym2{1.0, 0.0, 1.0});
    e[7] = Sym2{1.0, 2.0, 1.0};
    EXPECT_THROW(CoefficientField(g, e, 0.5, 2.0), InvalidArgument);
    EXPECT_THROW((void)CoefficientField::with_computed_bounds(g, e), InvalidArgument);
}

TEST(Assemble, DirichletPlanarMatchesEllipticOperator) {
    auto g = build_grid(Shape::half, 6, 4);
    auto a = CoefficientField::identity(g);
    auto w1 = assemble_weighted(a, 0.0, PlanarCondition::dirichlet);
    auto w2 = assemble_elliptic(a);
    EXPECT_EQ(w1.unknowns(), w2.unknowns());
    EXPECT_EQ(w1.unknowns().size(), 5u * 3u);
}

TEST(Assemble, CooExport) {
    auto g = build_grid(Shape::half, 2, 2);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    std::ostringstream os;
    op.stiffness().write_coo(os);
    std::istringstream is(os.str());
    std::size_t r, c;
    double v;
    is >> r >> c >> v;
    EXPECT_EQ(r, 0u);
    EXPECT_GT(v, 0.0);
}

TEST(Rhs, ZeroData) {
    auto g = build_grid(Shape::half, 6, 4);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    auto gz = GridFunction(g, [](double, double) { return 0.0; });
    for (double b : assemble_rhs(op, VectorField::zero(g), &gz)) {
        EXPECT_EQ(b, 0.0);
    }
}

TEST(Rhs, ConstantFieldIsWeakDivergence) {
    auto g = build_grid(Shape::half, 8, 5);
    const auto k = assemble_nodal_stiffness(*g, CoefficientField::identity(g).entries(), 2.0);
    for (int comp = 0; comp < 2; ++comp) {
        auto f = VectorField::from_function(g, [&](double, double) { return comp ? Vec2{0, 1} : Vec2{1, 0}; });
        const auto b = assemble_rhs_full(*g, 2.0, f, nullptr);
        // Same quadrature as the stiffness: b = K * (x_1 or x_n samples).
        GridFunction lin(g, [&](double x, double y) { return comp ? y : x; });
        const auto kl = k * lin.values();
        for (std::size_t n = 0; n < b.size(); ++n) {
            EXPECT_NEAR(b[n], kl[n], 1e-13);
        }
        EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), 0.0, 1e-13);
        auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
        const auto bu = assemble_rhs(op, f, nullptr);
        double outer = 0.0;
        for (std::size_t n = 0; n < b.size(); ++n) {
            outer += op.is_constrained(n) ? b[n] : 0.0;
        }
        EXPECT_NEAR(std::accumulate(bu.begin(), bu.end(), 0.0), -outer, 1e-13);
    }
}

TEST(Rhs, SourceTermIntegratesXn) {
    auto g = build_grid(Shape::half, 8, 6);
    GridFunction one(g, [](double, double) { return 1.0; });
    const auto b = assemble_rhs_full(*g, 2.0, VectorField::zero(g), &one);
    const auto m1 = nodal_masses(*g, 1.0);
    for (std::size_t n = 0; n < b.size(); ++n) {
        EXPECT_NEAR(b[n], -m1[n], 1e-15);
    }
    EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), -1.0, 1e-12);
}

TEST(Rhs, ShapeMismatch) {
    auto g = build_grid(Shape::half, 6, 4);
    auto other = build_grid(Shape::half, 4, 4);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    EXPECT_THROW((void)assemble_rhs(op, VectorField::zero(other)), InvalidArgument);
}

TEST(Solve, Constants) {
    auto g = build_grid(Shape::half, 16, 8);
    auto r = solve_homogeneous(g, [](double, double) { return 1.0; });
    for (double v : r.w.values()) {
        EXPECT_NEAR(v, 1.0, 1e-9);
    }
}

TEST(Solve, VerticallyConstantLinear) {
    auto g = build_grid(Shape::half, 16, 8);
    auto r = solve_homogeneous(g, [](double x, double) { return x; });
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        EXPECT_NEAR(r.w[n], g->x1(g->i_of(n)), 1e-9);
    }
}

class ExactSuite : public ::testing::TestWithParam<int> {};

TEST_P(ExactSuite, SecondOrder) {
    const std::vector<Fn> fns = {
        [](double x, double y) { return 3 * x * x - y * y; },
        [](double x, double y) { return x * x * x - x * y * y; },
    };
    const Fn exact = fns[GetParam()];
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto r = solve_homogeneous(g, exact);
        hs.push_back(g->h1());
        errs.push_back(rel_l2_error(r.w, exact));
    }
    EXPECT_GE(stats::convergence_order(hs, errs), 1.8);
}

INSTANTIATE_TEST_SUITE_P(Harmonic, ExactSuite, ::testing::Values(0, 1));

TEST(Solve, MixedCoefficientsSecondOrder) {
    // Manufactured: div(x_n^2 A grad w) = div(x_n^2 f) with f = A grad w.
    const Fn exact = [](double x, double y) { return std::sin(2 * x) * std::cos(y) + x * y; };
    const auto coeff = [](double x, double y) { return Sym2{2.0 + 0.5 * std::sin(x), 0.4 + 0.2 * x * y, 1.0 + y}; };
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto a = CoefficientField::from_function(g, coeff);
        auto f = VectorField::from_function(g, [&](double x, double y) {
            const double d1 = 2 * std::cos(2 * x) * std::cos(y) + y;
            const double dn = -std::sin(2 * x) * std::sin(y) + x;
            const Sym2 m = coeff(x, y);
            return Vec2{m.a11 * d1 + m.a12 * dn, m.a12 * d1 + m.a22 * dn};
        });
        auto op = assemble_weighted(a, 2.0);
        auto r = solve(op, assemble_rhs(op, f), BoundaryData::from_function(*g, exact));
        hs.push_back(g->h1());
        errs.push_back(rel_l2_error(r.w, exact));
    }
    EXPECT_GE(stats::convergence_order(hs, errs), 1.8);
}

TEST(Solve, JacobiPreconditionerAgrees) {
    auto g = build_grid(Shape::half, 16, 8);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    auto bd = BoundaryData::from_function(*g, [](double x, double y) { return 3 * x * x - y * y; });
    auto plain = solve(op, rhs, bd);
    CgOptions jac;
    jac.jacobi = true;
    auto pre = solve(op, rhs, bd, jac);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        EXPECT_NEAR(plain.w[n], pre.w[n], 1e-8);
    }
}

TEST(Solve, NonConvergenceCarriesHistory) {
    auto g = build_grid(Shape::half, 16, 8);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    CgOptions one;
    one.max_iterations = 1;
    try {
        (void)solve(op, rhs, BoundaryData::from_function(*g, [](double x, double y) { return x * x + y; }), one);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.residual_history.size(), 2u);
    }
}

TEST(Residual, SolverContract) {
    auto g = build_grid(Shape::half, 16, 8);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    GridFunction src(g, [](double x, double y) { return std::cos(x) + y; });
    const auto rhs = assemble_rhs(op, VectorField::zero(g), &src);
    auto r = solve(op, rhs, BoundaryData::constant(*g, 0.0));
    EXPECT_LE(residual_norm(op, r.w, rhs), 1e-10 * norm2(rhs) + 1e-12);
}

TEST(Residual, UnitPerturbationGivesColumnNorm) {
    auto g = build_grid(Shape::half, 8, 4);
    auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
    std::vector<double> v(g->node_count(), 0.0);
    const std::size_t node = g->node(3, 2);
    v[node] = 1.0;
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    const double r = residual_norm(op, GridFunction(g, v), rhs);
    const auto col = op.stiffness() * std::vector<double>([&] {
        std::vector<double> e(op.unknowns().size(), 0.0);
        e[static_cast<std::size_t>(op.unknown_index(node))] = 1.0;
        return e;
    }());
    EXPECT_NEAR(r, norm2(col), 1e-14);
    EXPECT_GT(r, 0.0);
}

TEST(Residual, TruncationSecondOrder) {
    std::vector<double> hs, res;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto op = assemble_weighted(CoefficientField::identity(g), 2.0);
        GridFunction w(g, [](double x, double y) { return 3 * x * x - y * y; });
        std::vector<double> rhs(op.unknowns().size(), 0.0);
        hs.push_back(g->h1());
        res.push_back(scaled_residual(op, w, rhs, false));
    }
    EXPECT_GE(stats::convergence_order(hs, res), 1.8);
}

TEST(Properties, EnergyIdentity) {
    auto g = build_grid(Shape::half, 24, 12);
    auto a = CoefficientField::from_function(g, [](double x, double y) { return Sym2{1.5 + 0.5 * std::sin(3 * x), 0.2 * y, 1.0}; });
    auto op = assemble_weighted(a, 2.0);
    std::vector<double> rhs(op.unknowns().size(), 0.0);
    auto r = solve(op, rhs, BoundaryData::from_function(*g, [](double x, double y) { return std::exp(x) * (1 + y); }));
    const double e = discrete_energy(op, r.w);
    EXPECT_GT(e, 0.0);
    EXPECT_NEAR(boundary_pairing(op, r.w), e, 1e-8 * e);
}

TEST(Properties, MaximumPrinciple) {
    auto g = build_grid(Shape::half, 24, 12);
    const Fn data = [](double x, double y) { return std::sin(4 * x) + 0.3 * y; };
    auto r = solve_homogeneous(g, data);
    double lo = 1e300, hi = -1e300;
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        if (g->tag(n) == NodeTag::outer || (g->tag(n) == NodeTag::planar && (g->i_of(n) == 0 || g->i_of(n) == g->nx()))) {
            lo = std::min(lo, r.w[n]);
            hi = std::max(hi, r.w[n]);
        }
    }
    for (double v : r.w.values()) {
        EXPECT_GE(v, lo - 1e-8);
        EXPECT_LE(v, hi + 1e-8);
    }
}

TEST(Properties, CaccioppoliConstantStable) {
    std::vector<double> cs;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto r = solve_homogeneous(g, [](double x, double y) { return std::cos(2 * x) * (1 + y) + x; });
        const double inner = std::pow(weighted_h1_seminorm(r.w, 2.0, Region{-0.5, 0.5, 0.0, 0.5}), 2);
        std::vector<double> sq(r.w.values().begin(), r.w.values().end());
        for (double& v : sq) {
            v *= v;
        }
        cs.push_back(inner / integrate_weighted(GridFunction(g, sq), 0.0));
    }
    const double mean = (cs[0] + cs[1] + cs[2]) / 3.0;
    for (double c : cs) {
        EXPECT_NEAR(c, mean, 0.2 * mean);
    }
}

TEST(Poincare, Examples) {
    auto g = build_grid(Shape::half, 64, 32);
    GridFunction f(g, [](double x, double y) { return y * (1 - y) * (1 - x * x); });
    auto r = poincare_ratio(f);
    ASSERT_TRUE(r.has_value());
    EXPECT_LE(*r, 4.0 * 1.05);
    EXPECT_FALSE(poincare_ratio(GridFunction(g, [](double, double) { return 0.0; })).has_value());
    EXPECT_THROW((void)poincare_ratio(GridFunction(g, [](double, double) { return 1.0; })), InvalidArgument);
}

TEST(Poincare, RandomBumps) {
    auto g = build_grid(Shape::half, 64, 32);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        auto r = poincare_ratio(random_bump_sum(g, rng));
        ASSERT_TRUE(r.has_value());
        EXPECT_LE(*r, 4.2);
    }
}

TEST(Serialization, SolveReport) {
    auto g = build_grid(Shape::half, 8, 4);
    auto r = solve_homogeneous(g, [](double x, double) { return x; });
    auto j = to_json(r);
    EXPECT_EQ(j["iterations"].get<std::size_t>(), r.iterations);
    EXPECT_EQ(j["residual_history"].size(), r.residual_history.size());
}
