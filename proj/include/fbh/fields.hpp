#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "fbh/grid.hpp"

namespace fbh {

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;

    [[nodiscard]] double min_eigenvalue() const;
    [[nodiscard]] double max_eigenvalue() const;

    friend Sym2 operator*(double s, const Sym2& m) { return {s * m.a11, s * m.a12, s * m.a22}; }
    friend Sym2 operator+(const Sym2& a, const Sym2& b) { return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22}; }
};

struct Vec2 {
    double v1 = 0.0, vn = 0.0;
};

/// Uniformly elliptic symmetric coefficient field, lambda I <= A <= Lambda I at every node.
class CoefficientField {
public:
    /// Checks the stated bounds at every node (tolerance 1e-10).
    CoefficientField(GridPtr grid, std::vector<Sym2> entries, double lambda, double Lambda);

    /// Bounds taken as the extreme nodal eigenvalues; throws unless lambda > 0.
    static CoefficientField with_computed_bounds(GridPtr grid, std::vector<Sym2> entries);
    static CoefficientField identity(GridPtr grid);
    static CoefficientField from_function(GridPtr grid, const std::function<Sym2(double, double)>& a);

    [[nodiscard]] const Grid& grid() const { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
    [[nodiscard]] const Sym2& operator[](std::size_t n) const { return entries_[n]; }
    [[nodiscard]] const std::vector<Sym2>& entries() const { return entries_; }
    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] double Lambda() const { return Lambda_; }
    [[nodiscard]] bool has_mixed_terms() const;
    /// Entry-wise bilinear interpolation.
    [[nodiscard]] Sym2 interpolate(double x1, double xn) const;

private:
    GridPtr grid_;
    std::vector<Sym2> entries_;
    double lambda_, Lambda_;
};

class VectorField {
public:
    VectorField(GridPtr grid, std::vector<Vec2> values);
    static VectorField zero(GridPtr grid);
    static VectorField from_function(GridPtr grid, const std::function<Vec2(double, double)>& f);

    [[nodiscard]] const Grid& grid() const { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
    [[nodiscard]] const Vec2& operator[](std::size_t n) const { return values_[n]; }
    [[nodiscard]] const std::vector<Vec2>& values() const { return values_; }
    [[nodiscard]] Vec2 interpolate(double x1, double xn) const;

private:
    GridPtr grid_;
    std::vector<Vec2> values_;
};

/// CSV with columns i, j, a11, a12, a22.
void write_csv(std::ostream& os, const CoefficientField& a);

}  // namespace fbh
