#include "fbh/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "fbh/errors.hpp"

namespace fbh {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) : rows_(rows), cols_(cols) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(rows + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
        const Triplet& t = triplets[k];
        if (t.row >= rows || t.col >= cols) {
            throw InvalidArgument("triplet index out of range");
        }
        double v = 0.0;
        std::size_t m = k;
        while (m < triplets.size() && triplets[m].row == t.row && triplets[m].col == t.col) {
            v += triplets[m].value;
            ++m;
        }
        cols_idx_.push_back(t.col);
        values_.push_back(v);
        ++row_ptr_[t.row + 1];
        k = m;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        row_ptr_[r + 1] += row_ptr_[r];
    }
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            s += values_[k] * x[cols_idx_[k]];
        }
        y[r] = s;
    }
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

double CsrMatrix::coeff(std::size_t r, std::size_t c) const {
    auto cs = row_cols(r);
    auto it = std::lower_bound(cs.begin(), cs.end(), c);
    if (it == cs.end() || *it != c) {
        return 0.0;
    }
    return values_[row_ptr_[r] + static_cast<std::size_t>(it - cs.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(std::min(rows_, cols_));
    for (std::size_t r = 0; r < d.size(); ++r) {
        d[r] = coeff(r, r);
    }
    return d;
}

double CsrMatrix::symmetry_defect() const {
    double scale = 0.0;
    double defect = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            scale = std::max(scale, std::abs(values_[k]));
            const std::size_t c = cols_idx_[k];
            const double t = c < rows_ && r < cols_ ? coeff(c, r) : 0.0;
            defect = std::max(defect, std::abs(values_[k] - t));
        }
    }
    return scale > 0.0 ? defect / scale : 0.0;
}

void CsrMatrix::write_coo(std::ostream& os) const {
    os << std::setprecision(17);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            os << r << ' ' << cols_idx_[k] << ' ' << values_[k] << '\n';
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::vector<double> x0,
                            const CgOptions& options) {
    const std::size_t n = a.rows();
    if (b.size() != n || x0.size() != n || a.cols() != n) {
        throw InvalidArgument("conjugate_gradient: dimension mismatch");
    }
    const std::size_t max_it = options.max_iterations ? options.max_iterations : 20 * std::max<std::size_t>(n, 1);

    CgResult result;
    result.x = std::move(x0);
    auto& x = result.x;

    std::vector<double> inv_diag(n, 1.0);
    if (options.jacobi) {
        const auto d = a.diagonal();
        for (std::size_t k = 0; k < n; ++k) {
            inv_diag[k] = d[k] != 0.0 ? 1.0 / d[k] : 1.0;
        }
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    a.multiply(x, r);
    for (std::size_t k = 0; k < n; ++k) {
        r[k] = b[k] - r[k];
    }
    const double bnorm = norm2(b);
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    double rnorm = norm2(r);
    result.residual_history.push_back(rnorm / scale);
    // An exactly zero right-hand side is met only by an exactly zero residual.
    const double target = bnorm > 0.0 ? options.relative_tolerance * bnorm : 1e-300;
    if (rnorm <= target) {
        result.converged = true;
        return result;
    }

    for (std::size_t k = 0; k < n; ++k) {
        z[k] = inv_diag[k] * r[k];
    }
    p = z;
    double rz = dot(r, z);
    while (result.iterations < max_it) {
        ++result.iterations;
        a.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) {
            break;
        }
        const double step = rz / pq;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += step * p[k];
            r[k] -= step * q[k];
        }
        rnorm = norm2(r);
        result.residual_history.push_back(rnorm / scale);
        if (rnorm <= target) {
            result.converged = true;
            break;
        }
        for (std::size_t k = 0; k < n; ++k) {
            z[k] = inv_diag[k] * r[k];
        }
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k) {
            p[k] = z[k] + beta * p[k];
        }
    }
    return result;
}

}  // namespace fbh
