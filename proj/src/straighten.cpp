#include "fbh/straighten.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "fbh/errors.hpp"

namespace fbh {

CurveModel::CurveModel(std::function<double(double, int)> f, int max_order) : f_(std::move(f)), max_order_(max_order) {
    if (!f_ || max_order_ < 1) {
        throw InvalidArgument("curve model needs a callable with at least one derivative");
    }
}

CurveModel CurveModel::flat() {
    return CurveModel([](double, int) { return 0.0; }, 1000);
}

CurveModel CurveModel::linear(double slope) {
    return CurveModel([slope](double t, int k) { return k == 0 ? slope * t : (k == 1 ? slope : 0.0); }, 1000);
}

CurveModel CurveModel::sine(double amplitude, double frequency) {
    return CurveModel(
        [amplitude, frequency](double t, int k) {
            // d^k/dt^k sin(w t) = w^k sin(w t + k pi / 2)
            return amplitude * std::pow(frequency, k) * std::sin(frequency * t + k * M_PI / 2.0);
        },
        1000);
}

CurveModel CurveModel::from_curve(const FreeBoundaryCurve& curve, bool recenter, double center) {
    if (curve.axis != Axis::xn) {
        throw InvalidArgument("straightening needs a graph over x_1 (axis xn)");
    }
    const CubicSpline s = curve.spline;
    const double shift = recenter ? center : 0.0;
    const double offset = recenter ? s(center) : 0.0;
    return CurveModel(
        [s, shift, offset](double t, int k) {
            const double v = s.derivative(t + shift, k);
            return k == 0 ? v - offset : v;
        },
        3);
}

double CurveModel::derivative(double t, int order) const {
    if (order < 0 || order > max_order_) {
        throw InvalidArgument("curve derivative of order " + std::to_string(order) + " not available (max " +
                              std::to_string(max_order_) + ")");
    }
    return f_(t, order);
}

double CurveModel::max_slope(double lo, double hi, int samples) const {
    double m = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = lo + (hi - lo) * k / (samples - 1);
        m = std::max(m, std::abs(f_(t, 1)));
    }
    return m;
}

Jacobians jacobians(const CurveModel& c, double x1, double) {
    const double g = c.derivative(x1, 1);
    Jacobians j;
    j.dy_dx << 1.0, 0.0, g, 1.0;
    j.dx_dy << 1.0, 0.0, -g, 1.0;
    j.det = 1.0;
    return j;
}

std::array<double, 2> to_y(const CurveModel& c, double x1, double xn) { return {x1, xn + c(x1)}; }
std::array<double, 2> to_x(const CurveModel& c, double y1, double yn) { return {y1, yn - c(y1)}; }

Sym2 transform_matrix(const Sym2& b, const Jacobians& j) {
    Eigen::Matrix2d bm;
    bm << b.a11, b.a12, b.a12, b.a22;
    const Eigen::Matrix2d a = j.det * j.dx_dy * bm * j.dx_dy.transpose();
    return {a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1)};
}

Vec2 transform_vector(const Vec2& f, const Jacobians& j) {
    const Eigen::Vector2d v = j.det * j.dx_dy * Eigen::Vector2d(f.v1, f.vn);
    return {v(0), v(1)};
}

namespace {

void require_slope(const CurveModel& c, const Grid& g) {
    double m = 0.0;
    for (int i = 0; i <= g.nx(); ++i) {
        m = std::max(m, std::abs(c.derivative(g.x1(i), 1)));
    }
    if (m > 1.0) {
        throw HypothesisViolation("straightening requires |grad gamma| <= 1 (max " + std::to_string(m) + ")", m);
    }
}

CoefficientField transform_sampled(const std::function<Sym2(double, double)>& sample, double lambda_b,
                                   const CurveModel& c, const GridPtr& target) {
    const Grid& g = *target;
    require_slope(c, g);
    std::vector<Sym2> out(g.node_count());
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double x1 = g.x1(g.i_of(n)), xn = g.xn(g.j_of(n));
        const auto y = to_y(c, x1, xn);
        const auto j = jacobians(c, x1, xn);
        out[n] = transform_matrix(sample(y[0], y[1]), j);
        const double smin = Eigen::JacobiSVD<Eigen::Matrix2d>(j.dx_dy).singularValues()(1);
        const double floor = lambda_b * smin * smin;
        if (out[n].min_eigenvalue() < floor * (1.0 - 1e-10)) {
            throw HypothesisViolation("transformed coefficients lose ellipticity at node " + std::to_string(n) +
                                          " (x = " + std::to_string(x1) + ", " + std::to_string(xn) + ")",
                                      out[n].min_eigenvalue());
        }
    }
    return CoefficientField::with_computed_bounds(target, std::move(out));
}

}  // namespace

CoefficientField transform_coefficients(const MatrixFunction& b, const CurveModel& c, const GridPtr& target) {
    // Ellipticity of a callable is only known where it is sampled.
    const Grid& g = *target;
    double lambda_b = 1e300;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const auto y = to_y(c, g.x1(g.i_of(n)), g.xn(g.j_of(n)));
        lambda_b = std::min(lambda_b, b(y[0], y[1]).min_eigenvalue());
    }
    if (!(lambda_b > 0.0)) {
        throw HypothesisViolation("coefficient matrix is not elliptic at the sampled points", lambda_b);
    }
    return transform_sampled(b, lambda_b, c, target);
}

CoefficientField transform_coefficients(const CoefficientField& b, const CurveModel& c, const GridPtr& target) {
    return transform_sampled([&b](double y1, double yn) { return b.interpolate(y1, yn); }, b.lambda(), c, target);
}

VectorField transform_rhs(const VectorFunction& f, const CurveModel& c, const GridPtr& target) {
    const Grid& g = *target;
    require_slope(c, g);
    std::vector<Vec2> out(g.node_count());
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double x1 = g.x1(g.i_of(n)), xn = g.xn(g.j_of(n));
        const auto y = to_y(c, x1, xn);
        out[n] = transform_vector(f(y[0], y[1]), jacobians(c, x1, xn));
    }
    return VectorField(target, std::move(out));
}

VectorField transform_rhs(const VectorField& f, const CurveModel& c, const GridPtr& target) {
    return transform_rhs([&f](double y1, double yn) { return f.interpolate(y1, yn); }, c, target);
}

GridFunction pullback_function(const ScalarFunction& u, const CurveModel& c, const GridPtr& target) {
    return GridFunction(target, [&](double x1, double xn) {
        const auto y = to_y(c, x1, xn);
        return u(y[0], y[1]);
    });
}

GridFunction pullback_function(const GridFunction& u, const CurveModel& c, const GridPtr& target) {
    return pullback_function([&u](double y1, double yn) { return u.interpolate(y1, yn); }, c, target);
}

}  // namespace fbh
