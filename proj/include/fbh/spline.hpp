#pragma once

#include <vector>

namespace fbh {

/// Interpolating cubic spline with not-a-knot end conditions.
///
/// Two samples give the straight line and three the interpolating parabola.
/// Evaluation outside the sample range extends the end pieces.
class CubicSpline {
public:
    CubicSpline() = default;
    /// `x` strictly increasing, same length as `y`, at least two samples.
    CubicSpline(std::vector<double> x, std::vector<double> y);

    [[nodiscard]] double operator()(double t) const { return derivative(t, 0); }
    /// Derivative of order 0..3 (zero above 3).
    [[nodiscard]] double derivative(double t, int order) const;

    [[nodiscard]] const std::vector<double>& knots() const { return x_; }
    [[nodiscard]] const std::vector<double>& values() const { return y_; }

private:
    std::vector<double> x_, y_;
    std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace fbh
