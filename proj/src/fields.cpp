#include "fbh/fields.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fbh/errors.hpp"

namespace fbh {

namespace {

double half_gap(const Sym2& m) { return std::hypot(0.5 * (m.a11 - m.a22), m.a12); }

}  // namespace

double Sym2::min_eigenvalue() const { return 0.5 * (a11 + a22) - half_gap(*this); }
double Sym2::max_eigenvalue() const { return 0.5 * (a11 + a22) + half_gap(*this); }

CoefficientField::CoefficientField(GridPtr grid, std::vector<Sym2> entries, double lambda, double Lambda)
    : grid_(std::move(grid)), entries_(std::move(entries)), lambda_(lambda), Lambda_(Lambda) {
    if (entries_.size() != grid_->node_count()) {
        throw InvalidArgument("coefficient field size does not match grid");
    }
    if (!(lambda_ > 0.0) || Lambda_ < lambda_) {
        throw InvalidArgument("ellipticity bounds must satisfy 0 < lambda <= Lambda");
    }
    constexpr double tol = 1e-10;
    for (std::size_t n = 0; n < entries_.size(); ++n) {
        const Sym2& m = entries_[n];
        if (!std::isfinite(m.a11) || !std::isfinite(m.a12) || !std::isfinite(m.a22)) {
            throw InvalidArgument("coefficient field entries must be finite");
        }
        const double lo = m.min_eigenvalue();
        const double hi = m.max_eigenvalue();
        if (lo < lambda_ - tol || hi > Lambda_ + tol) {
            std::ostringstream msg;
            msg << "ellipticity violated at node (" << grid_->i_of(n) << ", " << grid_->j_of(n)
                << "): eigenvalues [" << lo << ", " << hi << "] outside [" << lambda_ << ", " << Lambda_ << "]";
            throw InvalidArgument(msg.str());
        }
    }
}

CoefficientField CoefficientField::with_computed_bounds(GridPtr grid, std::vector<Sym2> entries) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Sym2& m : entries) {
        lo = std::min(lo, m.min_eigenvalue());
        hi = std::max(hi, m.max_eigenvalue());
    }
    if (!(lo > 0.0)) {
        std::ostringstream msg;
        msg << "coefficient field is not uniformly elliptic (min eigenvalue " << lo << ")";
        throw InvalidArgument(msg.str());
    }
    return CoefficientField(std::move(grid), std::move(entries), lo, hi);
}

CoefficientField CoefficientField::identity(GridPtr grid) {
    std::vector<Sym2> e(grid->node_count(), Sym2{});
    return CoefficientField(std::move(grid), std::move(e), 1.0, 1.0);
}

CoefficientField CoefficientField::from_function(GridPtr grid, const std::function<Sym2(double, double)>& a) {
    std::vector<Sym2> e(grid->node_count());
    for (std::size_t n = 0; n < e.size(); ++n) {
        e[n] = a(grid->x1(grid->i_of(n)), grid->xn(grid->j_of(n)));
    }
    return with_computed_bounds(std::move(grid), std::move(e));
}

bool CoefficientField::has_mixed_terms() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const Sym2& m) { return m.a12 != 0.0; });
}

Sym2 CoefficientField::interpolate(double x1, double xn) const {
    const auto st = bilinear_stencil(*grid_, x1, xn);
    Sym2 m{0.0, 0.0, 0.0};
    for (int k = 0; k < 4; ++k) {
        m = m + st.weights[k] * entries_[st.nodes[k]];
    }
    return m;
}

Vec2 VectorField::interpolate(double x1, double xn) const {
    const auto st = bilinear_stencil(*grid_, x1, xn);
    Vec2 v{};
    for (int k = 0; k < 4; ++k) {
        v.v1 += st.weights[k] * values_[st.nodes[k]].v1;
        v.vn += st.weights[k] * values_[st.nodes[k]].vn;
    }
    return v;
}

VectorField::VectorField(GridPtr grid, std::vector<Vec2> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->node_count()) {
        throw InvalidArgument("vector field size does not match grid");
    }
    for (const Vec2& v : values_) {
        if (!std::isfinite(v.v1) || !std::isfinite(v.vn)) {
            throw InvalidArgument("vector field entries must be finite");
        }
    }
}

VectorField VectorField::zero(GridPtr grid) {
    std::vector<Vec2> v(grid->node_count());
    return VectorField(std::move(grid), std::move(v));
}

VectorField VectorField::from_function(GridPtr grid, const std::function<Vec2(double, double)>& f) {
    std::vector<Vec2> v(grid->node_count());
    for (std::size_t n = 0; n < v.size(); ++n) {
        v[n] = f(grid->x1(grid->i_of(n)), grid->xn(grid->j_of(n)));
    }
    return VectorField(std::move(grid), std::move(v));
}

void write_csv(std::ostream& os, const CoefficientField& a) {
    const Grid& g = a.grid();
    os << "i,j,a11,a12,a22\n" << std::setprecision(17);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        os << g.i_of(n) << ',' << g.j_of(n) << ',' << a[n].a11 << ',' << a[n].a12 << ',' << a[n].a22 << '\n';
    }
}

}  // namespace fbh
