#include "fbh/spline.hpp"

#include <algorithm>

#include <Eigen/Dense>

#include "fbh/errors.hpp"

namespace fbh {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
        throw InvalidArgument("spline needs at least two samples with matching lengths");
    }
    for (std::size_t k = 1; k < n; ++k) {
        if (!(x_[k] > x_[k - 1])) {
            throw InvalidArgument("spline abscissae must be strictly increasing");
        }
    }
    m_.assign(n, 0.0);
    if (n == 2) {
        return;
    }
    // Unknowns: second derivatives M_0..M_{n-1}.
    const auto len = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(len, len);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(len);
    std::vector<double> h(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        a(r, r - 1) = h[k - 1] / 6.0;
        a(r, r) = (h[k - 1] + h[k]) / 3.0;
        a(r, r + 1) = h[k] / 6.0;
        b(r) = (y_[k + 1] - y_[k]) / h[k] - (y_[k] - y_[k - 1]) / h[k - 1];
    }
    if (n == 3) {
        // Single parabola: equal second derivatives.
        a(0, 0) = 1.0;
        a(0, 1) = -1.0;
        a(2, 1) = 1.0;
        a(2, 2) = -1.0;
    } else {
        // Not-a-knot: third derivative continuous across the second and penultimate knots.
        a(0, 0) = h[1];
        a(0, 1) = -(h[0] + h[1]);
        a(0, 2) = h[0];
        const auto l = len - 1;
        a(l, l - 2) = h[n - 2];
        a(l, l - 1) = -(h[n - 3] + h[n - 2]);
        a(l, l) = h[n - 3];
    }
    const Eigen::VectorXd m = a.partialPivLu().solve(b);
    for (std::size_t k = 0; k < n; ++k) {
        m_[k] = m(static_cast<Eigen::Index>(k));
    }
}

double CubicSpline::derivative(double t, int order) const {
    if (x_.empty()) {
        throw InvalidArgument("evaluating an empty spline");
    }
    const auto it = std::upper_bound(x_.begin() + 1, x_.end() - 1, t);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[k + 1] - x_[k];
    const double a = x_[k + 1] - t;
    const double b = t - x_[k];
    const double m0 = m_[k], m1 = m_[k + 1];
    const double c0 = y_[k] / h - m0 * h / 6.0;
    const double c1 = y_[k + 1] / h - m1 * h / 6.0;
    switch (order) {
        case 0:
            return (m0 * a * a * a + m1 * b * b * b) / (6.0 * h) + c0 * a + c1 * b;
        case 1:
            return (-m0 * a * a + m1 * b * b) / (2.0 * h) - c0 + c1;
        case 2:
            return (m0 * a + m1 * b) / h;
        case 3:
            return (m1 - m0) / h;
        default:
            return 0.0;
    }
}

}  // namespace fbh
