#pragma once

#include <functional>

#include <Eigen/Core>

#include "fbh/fields.hpp"
#include "fbh/grid.hpp"
#include "fbh/obstacle.hpp"

namespace fbh {

/// Graph x_n = gamma(x_1) used for the vertical chart y = x + gamma(x_1) e_n.
class CurveModel {
public:
    /// `f(t, order)` returns the derivative of the given order (0 = value) for
    /// orders up to `max_order`.
    CurveModel(std::function<double(double, int)> f, int max_order);

    static CurveModel flat();
    static CurveModel linear(double slope);
    /// amplitude * sin(frequency * x_1).
    static CurveModel sine(double amplitude, double frequency);
    /// From an extracted graph over x_1 (axis xn). With `recenter` the model
    /// is gamma(t + center) - gamma(center), so it passes through the origin.
    static CurveModel from_curve(const FreeBoundaryCurve& curve, bool recenter = true, double center = 0.0);

    [[nodiscard]] double operator()(double t) const { return f_(t, 0); }
    /// Throws InvalidArgument above max_order().
    [[nodiscard]] double derivative(double t, int order) const;
    [[nodiscard]] int max_order() const { return max_order_; }
    /// max |gamma'| over `samples` equispaced points of [lo, hi].
    [[nodiscard]] double max_slope(double lo = -1.0, double hi = 1.0, int samples = 2001) const;

private:
    std::function<double(double, int)> f_;
    int max_order_;
};

struct Jacobians {
    Eigen::Matrix2d dy_dx;  // I + grad gamma (x) e_n
    Eigen::Matrix2d dx_dy;  // exact inverse
    double det;             // 1
};

[[nodiscard]] Jacobians jacobians(const CurveModel& c, double x1, double xn);

/// y(x) = x + gamma(x_1) e_n and its inverse.
[[nodiscard]] std::array<double, 2> to_y(const CurveModel& c, double x1, double xn);
[[nodiscard]] std::array<double, 2> to_x(const CurveModel& c, double y1, double yn);

/// det(dy/dx) J B J^T with J = dx/dy.
[[nodiscard]] Sym2 transform_matrix(const Sym2& b, const Jacobians& j);
/// det(dy/dx) J f.
[[nodiscard]] Vec2 transform_vector(const Vec2& f, const Jacobians& j);

using MatrixFunction = std::function<Sym2(double, double)>;
using VectorFunction = std::function<Vec2(double, double)>;
using ScalarFunction = std::function<double(double, double)>;

/// Coefficients in x of an equation given in y. B is sampled at y(x) for every
/// node of `target`. Requires max |gamma'| <= 1 over the target and rejects
/// (HypothesisViolation, naming the node) any node whose smallest eigenvalue
/// falls below lambda_B * sigma_min(dx/dy)^2.
[[nodiscard]] CoefficientField transform_coefficients(const MatrixFunction& b, const CurveModel& c,
                                                      const GridPtr& target);
/// Same with B given on a y-grid, bilinearly interpolated at y(x).
[[nodiscard]] CoefficientField transform_coefficients(const CoefficientField& b, const CurveModel& c,
                                                      const GridPtr& target);

[[nodiscard]] VectorField transform_rhs(const VectorFunction& f, const CurveModel& c, const GridPtr& target);
[[nodiscard]] VectorField transform_rhs(const VectorField& f, const CurveModel& c, const GridPtr& target);

/// Nodal values u(y(x)).
[[nodiscard]] GridFunction pullback_function(const ScalarFunction& u, const CurveModel& c, const GridPtr& target);
/// Same for a grid function in y; throws InvalidArgument when y(x) leaves its grid.
[[nodiscard]] GridFunction pullback_function(const GridFunction& u, const CurveModel& c, const GridPtr& target);

}  // namespace fbh
