#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

namespace fbh {

struct Triplet {
    std::size_t row, col;
    double value;
};

/// Compressed sparse row matrix; duplicate triplets are summed.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const;

    [[nodiscard]] double coeff(std::size_t r, std::size_t c) const;
    [[nodiscard]] std::vector<double> diagonal() const;

    /// max |a_ij - a_ji| / max |a_ij|.
    [[nodiscard]] double symmetry_defect() const;

    /// Row r as (column, value) pairs.
    [[nodiscard]] std::span<const std::size_t> row_cols(std::size_t r) const {
        return {cols_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    [[nodiscard]] std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    /// Coordinate text format, one "row col value" line per stored entry.
    void write_coo(std::ostream& os) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_idx_;
    std::vector<double> values_;
};

struct CgOptions {
    double relative_tolerance = 1e-10;
    /// 0 selects 20 * unknowns.
    std::size_t max_iterations = 0;
    bool jacobi = false;
};

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    std::vector<double> residual_history;  // relative residual norms, starting with iteration 0
    bool converged = false;
};

/// Conjugate gradients for a symmetric positive definite system, started from x0.
[[nodiscard]] CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::vector<double> x0,
                                          const CgOptions& options);

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);

}  // namespace fbh
