#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbh/fields.hpp"
#include "fbh/grid.hpp"
#include "fbh/spline.hpp"
#include "fbh/weighted_solver.hpp"

namespace fbh {

struct ObstacleOptions {
    double omega = 1.5;
    std::size_t max_sweeps = 100000;
    double tolerance = 1e-8;
    /// Start from the interpolated solution on the grid with half the cells
    /// (recursively, while both counts are even and at least 32).
    bool warm_start = true;
};

struct ObstacleSolution {
    GridFunction U;
    std::vector<bool> active;  // U > threshold
    double threshold;          // 1e-10 * max(U)
    std::size_t iterations;    // PSOR sweeps on this grid
    std::size_t coarse_sweeps; // sweeps spent on warm-start grids
    double complementarity_residual;
};

/// Discrete complementarity residual max_i |min(U_i, 1 - (L U)_i)| over
/// interior nodes, with L the pointwise discrete div(A grad .).
[[nodiscard]] double complementarity_residual(const CoefficientField& a, const GridFunction& U);

/// Obstacle problem div(A grad U) = chi_{U > 0}, U >= 0 on a full grid with
/// U = bd on the boundary, by projected SOR in lexicographic node order.
/// Throws SolverError (history of the residual every 100 sweeps) when
/// max_sweeps is exhausted.
[[nodiscard]] ObstacleSolution solve_obstacle(const CoefficientField& a, const BoundaryData& bd,
                                              const ObstacleOptions& options = {});

/// Direction of the graph: `xn` gives x_n = gamma(x_1) (columns run along x_n),
/// `x1` gives x_1 = gamma(x_n).
enum class Axis { x1, xn };

/// Which crossing of a column defines the graph. `unique` rejects columns
/// with more than one crossing; `first` and `last` take the one with the
/// smallest or largest coordinate and record the column.
enum class Branch { unique, first, last };

struct FreeBoundaryCurve {
    Axis axis;
    std::vector<double> xp;     // strictly increasing
    std::vector<double> gamma;  // gamma(xp)
    CubicSpline spline;
    /// Columns (their x') where several crossings were found.
    std::vector<double> multi_crossings;

    [[nodiscard]] double operator()(double x) const { return spline(x); }
    [[nodiscard]] double derivative(double x, int order) const { return spline.derivative(x, order); }
    /// Point on the curve in (x_1, x_n) coordinates.
    [[nodiscard]] std::array<double, 2> point(double x) const;
};

/// Extracts the boundary of {U > threshold} column by column. The crossing is
/// placed where sqrt(U), extrapolated linearly from the two nearest positive
/// nodes, vanishes (U grows quadratically off the free boundary).
/// Columns without a crossing are skipped.
[[nodiscard]] FreeBoundaryCurve extract_free_boundary(const ObstacleSolution& sol, Axis axis,
                                                      Branch branch = Branch::unique);

struct BlowupFit {
    double r;
    bool skipped;  // r * unit disc leaves the domain
    double k;
    std::array<double, 2> e;
    double residual;
};

enum class Verdict { regular, inconclusive };

struct RegularPointReport {
    std::array<double, 2> x0;
    bool near_free_boundary;  // positive and zero nodes within 2h of x0
    std::vector<BlowupFit> fits;
    Verdict verdict;
};

/// Fits (k/2)((z.e)^+)^2 to U(x0 + r z)/r^2 on the unit disc for each radius
/// (decreasing). Regular when every fitted residual is below the previous one
/// (slack 1e-3), the last is below 1e-2 and k > 0.
[[nodiscard]] RegularPointReport blowup_check(const ObstacleSolution& sol, std::array<double, 2> x0,
                                              const std::vector<double>& radii);

// Serialization.
void write_csv(std::ostream& os, const FreeBoundaryCurve& c);
[[nodiscard]] nlohmann::json to_json(const FreeBoundaryCurve& c);
[[nodiscard]] nlohmann::json to_json(const RegularPointReport& r);
[[nodiscard]] nlohmann::json to_json(const ObstacleSolution& s);
[[nodiscard]] std::string to_string(Axis a);
[[nodiscard]] std::string to_string(Branch b);
[[nodiscard]] std::string to_string(Verdict v);

}  // namespace fbh
