#include <cmath>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "fbh/errors.hpp"
#include "fbh/stats.hpp"
#include "fbh/straighten.hpp"
#include "fbh/weighted_solver.hpp"

using namespace fbh;

namespace {

// Residual of div(A grad u) = div(f) for nodal u, normalized per dual cell.
double straightened_residual(const CoefficientField& a, const GridFunction& u, const VectorField& f) {
    auto op = assemble_elliptic(a);
    return scaled_residual(op, u, assemble_rhs(op, f), false);
}

Sym2 variable_b(double y1, double yn) { return {2.0 + std::sin(y1), 0.3 * std::cos(yn), 1.5 + 0.5 * y1 * y1}; }

}  // namespace

TEST(Jacobians, FlatIsIdentity) {
    auto j = jacobians(CurveModel::flat(), 0.3, 0.2);
    EXPECT_TRUE(j.dy_dx.isIdentity(0.0));
    EXPECT_TRUE(j.dx_dy.isIdentity(0.0));
    EXPECT_EQ(j.det, 1.0);
}

TEST(Jacobians, LinearCurve) {
    const double c = 0.7;
    auto j = jacobians(CurveModel::linear(c), -0.4, 0.5);
    EXPECT_EQ(j.dx_dy(0, 0), 1.0);
    EXPECT_EQ(j.dx_dy(0, 1), 0.0);
    EXPECT_EQ(j.dx_dy(1, 0), -c);
    EXPECT_EQ(j.dx_dy(1, 1), 1.0);
    EXPECT_TRUE((j.dy_dx * j.dx_dy).isIdentity(0.0));
}

TEST(Jacobians, VolumePreserving) {
    auto c = CurveModel::sine(0.1, M_PI);
    for (double x : {-0.9, -0.3, 0.1, 0.77}) {
        auto j = jacobians(c, x, 0.4);
        EXPECT_NEAR(j.dy_dx.determinant(), 1.0, 1e-15);
        EXPECT_NEAR(j.dx_dy.determinant(), 1.0, 1e-15);
        EXPECT_EQ(j.det, 1.0);
    }
}

TEST(Chart, RoundTrip) {
    auto c = CurveModel::sine(0.1, M_PI);
    for (double x : {-1.0, -0.25, 0.5}) {
        for (double y : {0.0, 0.3, 1.0}) {
            const auto p = to_y(c, x, y);
            const auto q = to_x(c, p[0], p[1]);
            EXPECT_EQ(q[0], x);
            EXPECT_NEAR(q[1], y, 1e-16);
        }
    }
}

TEST(Transform, FlatLeavesCoefficients) {
    auto g = build_grid(Shape::half, 8, 4);
    auto a = transform_coefficients(variable_b, CurveModel::flat(), g);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        const auto b = variable_b(g->x1(g->i_of(n)), g->xn(g->j_of(n)));
        EXPECT_EQ(a[n].a11, b.a11);
        EXPECT_EQ(a[n].a12, b.a12);
        EXPECT_EQ(a[n].a22, b.a22);
    }
}

TEST(Transform, LinearCurveIdentity) {
    const double c = 0.6;
    auto g = build_grid(Shape::half, 6, 3);
    auto a = transform_coefficients([](double, double) { return Sym2{}; }, CurveModel::linear(c), g);
    for (const auto& m : a.entries()) {
        EXPECT_NEAR(m.a11, 1.0, 1e-15);
        EXPECT_NEAR(m.a12, -c, 1e-15);
        EXPECT_NEAR(m.a22, 1.0 + c * c, 1e-15);
    }
}

TEST(Transform, EllipticityFloorAndSlope) {
    auto g = build_grid(Shape::half, 6, 3);
    // Slope 1 is admissible: the floor is lambda * sigma_min(J)^2 = (3 - sqrt 5)/2.
    auto a = transform_coefficients([](double, double) { return Sym2{}; }, CurveModel::linear(1.0), g);
    EXPECT_NEAR(a.lambda(), (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
    EXPECT_THROW((void)transform_coefficients([](double, double) { return Sym2{}; }, CurveModel::linear(1.5), g),
                 HypothesisViolation);
    EXPECT_THROW((void)transform_coefficients([](double, double) { return Sym2{1.0, 1.0, 1.0}; }, CurveModel::flat(), g),
                 HypothesisViolation);
}

TEST(Transform, SymmetricPerNode) {
    auto g = build_grid(Shape::half, 10, 5);
    auto a = transform_coefficients([](double, double) { return Sym2{}; }, CurveModel::sine(0.1, M_PI), g);
    // Sym2 stores one off-diagonal; check against the full product.
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        auto j = jacobians(CurveModel::sine(0.1, M_PI), g->x1(g->i_of(n)), 0.0);
        const Eigen::Matrix2d full = j.dx_dy * j.dx_dy.transpose();
        EXPECT_EQ(full(0, 1), full(1, 0));
        EXPECT_NEAR(a[n].a12, full(0, 1), 1e-15);
    }
}

TEST(TransformRhs, Examples) {
    auto g = build_grid(Shape::half, 4, 4);
    const double c = 0.5;
    auto zero = transform_rhs([](double, double) { return Vec2{}; }, CurveModel::linear(c), g);
    for (const auto& v : zero.values()) {
        EXPECT_EQ(v.v1, 0.0);
        EXPECT_EQ(v.vn, 0.0);
    }
    auto same = transform_rhs([](double x, double y) { return Vec2{x, y * y}; }, CurveModel::flat(), g);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        EXPECT_EQ(same[n].v1, g->x1(g->i_of(n)));
    }
    auto up = transform_rhs([](double, double) { return Vec2{0, 1}; }, CurveModel::linear(c), g);
    auto right = transform_rhs([](double, double) { return Vec2{1, 0}; }, CurveModel::linear(c), g);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        EXPECT_EQ(up[n].v1, 0.0);
        EXPECT_EQ(up[n].vn, 1.0);
        EXPECT_EQ(right[n].v1, 1.0);
        EXPECT_EQ(right[n].vn, -c);
    }
}

TEST(Pullback, Examples) {
    auto g = build_grid(Shape::half, 8, 4);
    auto flat = pullback_function([](double, double yn) { return yn; }, CurveModel::flat(), g);
    auto c = CurveModel::sine(0.1, M_PI);
    auto straight = pullback_function([&c](double y1, double yn) { return yn - c(y1); }, c, g);
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        EXPECT_EQ(flat[n], g->xn(g->j_of(n)));
        EXPECT_NEAR(straight[n], g->xn(g->j_of(n)), 1e-16);
    }
}

TEST(Pullback, GridSourceOutOfDomain) {
    auto src = build_grid(Shape::half, 8, 8);
    GridFunction u(src, [](double x, double y) { return x + y; });
    auto g = build_grid(Shape::half, 4, 4);
    EXPECT_NO_THROW((void)pullback_function(u, CurveModel::flat(), g));
    EXPECT_THROW((void)pullback_function(u, CurveModel::linear(0.5), g), InvalidArgument);
}

TEST(Pullback, HarmonicSatisfiesTransformedEquation) {
    auto c = CurveModel::sine(0.1, M_PI);
    std::vector<double> hs, res;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto a = transform_coefficients([](double, double) { return Sym2{}; }, c, g);
        auto u = pullback_function([](double y1, double yn) { return std::exp(y1) * std::sin(yn); }, c, g);
        hs.push_back(g->h1());
        res.push_back(straightened_residual(a, u, VectorField::zero(g)));
    }
    EXPECT_GE(stats::convergence_order(hs, res), 1.8);
}

TEST(Pullback, EquationPreservationWithSource) {
    // div_y(B grad u) = div_y(f) holds with f = B grad u for any u.
    auto c = CurveModel::sine(0.1, M_PI);
    auto u = [](double y1, double yn) { return std::cos(2 * y1) * std::exp(yn) + y1 * yn * yn; };
    auto f = [](double y1, double yn) {
        const double d1 = -2 * std::sin(2 * y1) * std::exp(yn) + yn * yn;
        const double dn = std::cos(2 * y1) * std::exp(yn) + 2 * y1 * yn;
        const Sym2 b = variable_b(y1, yn);
        return Vec2{b.a11 * d1 + b.a12 * dn, b.a12 * d1 + b.a22 * dn};
    };
    std::vector<double> hs, res;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto a = transform_coefficients(variable_b, c, g);
        hs.push_back(g->h1());
        res.push_back(straightened_residual(a, pullback_function(u, c, g), transform_rhs(f, c, g)));
    }
    EXPECT_GE(stats::convergence_order(hs, res), 1.8);
}

TEST(Transform, InvolutionConsistent) {
    // Forward by gamma onto a grid, then back by -gamma with bilinear
    // interpolation of the intermediate field: B is recovered to O(h^2).
    auto c = CurveModel::sine(0.1, M_PI);
    auto back = CurveModel([c](double t, int k) { return -c.derivative(t, k); }, 1000);
    std::vector<double> hs, err;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(Shape::half, n, n / 2);
        auto a = transform_coefficients(variable_b, c, g);
        double e = 0.0;
        for (double x1 = -0.9; x1 <= 0.9; x1 += 0.05) {
            for (double xn = 0.2; xn <= 0.8; xn += 0.05) {
                const auto y = to_y(back, x1, xn);
                const Sym2 r = transform_matrix(a.interpolate(y[0], y[1]), jacobians(back, x1, xn));
                const Sym2 b = variable_b(x1, xn);
                e = std::max({e, std::abs(r.a11 - b.a11), std::abs(r.a12 - b.a12), std::abs(r.a22 - b.a22)});
            }
        }
        hs.push_back(g->h1());
        err.push_back(e);
    }
    EXPECT_GE(stats::convergence_order(hs, err), 1.8);
}

TEST(CurveModel, FromExtractedCurve) {
    FreeBoundaryCurve fb{Axis::xn, {-1.0, -0.5, 0.0, 0.5, 1.0}, {}, {}, {}};
    for (double x : fb.xp) {
        fb.gamma.push_back(0.2 + 0.1 * x * x);
    }
    fb.spline = CubicSpline(fb.xp, fb.gamma);
    auto m = CurveModel::from_curve(fb);
    EXPECT_NEAR(m(0.0), 0.0, 1e-15);
    EXPECT_NEAR(m(0.3), 0.009, 1e-14);
    EXPECT_NEAR(m.derivative(0.3, 1), 0.06, 1e-13);
    EXPECT_NEAR(m.max_slope(), 0.2, 1e-12);
    EXPECT_THROW((void)m.derivative(0.0, 4), InvalidArgument);
    auto shifted = CurveModel::from_curve(fb, true, 0.5);
    EXPECT_NEAR(shifted(0.0), 0.0, 1e-15);
    EXPECT_NEAR(shifted.derivative(0.0, 1), 0.1, 1e-13);
    fb.axis = Axis::x1;
    EXPECT_THROW((void)CurveModel::from_curve(fb), InvalidArgument);
}
