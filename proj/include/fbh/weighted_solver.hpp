#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbh/fields.hpp"
#include "fbh/grid.hpp"
#include "fbh/sparse.hpp"

namespace fbh {

/// What the planar row x_n = 0 carries.
///
/// `natural` leaves planar nodes free (the only admissible choice for the
/// degenerate s = 2 problem); `dirichlet` prescribes them, which is what the
/// uniformly elliptic s = 0 problems in the boundary-Harnack pipeline need.
enum class PlanarCondition { natural, dirichlet };

/// Nodal flux-form stiffness over all nodes of `grid` for div(x_n^s A grad .).
///
/// Cell-based: each cell uses the average of its corner coefficients, edge
/// differences for the gradient and hat weights integrated exactly in x_n.
/// Gives the 5-point stencil when a12 == 0 and a symmetric 9-point stencil
/// otherwise. No ellipticity check is made here.
[[nodiscard]] CsrMatrix assemble_nodal_stiffness(const Grid& grid, std::span<const Sym2> coefficients, double s);

/// Lumped weights int x_n^s phi_i for every node.
[[nodiscard]] std::vector<double> nodal_masses(const Grid& grid, double s);

class WeightedOperator {
public:
    [[nodiscard]] const Grid& grid() const { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const { return grid_; }
    [[nodiscard]] double weight_exponent() const { return s_; }
    [[nodiscard]] PlanarCondition planar_condition() const { return planar_; }

    /// Stiffness restricted to unknown rows and columns (SPD).
    [[nodiscard]] const CsrMatrix& stiffness() const { return stiffness_; }
    /// Stiffness over all nodes.
    [[nodiscard]] const CsrMatrix& nodal_stiffness() const { return full_; }

    [[nodiscard]] const std::vector<std::size_t>& unknowns() const { return unknowns_; }
    [[nodiscard]] bool is_constrained(std::size_t node) const { return unknown_index_[node] < 0; }
    [[nodiscard]] long unknown_index(std::size_t node) const { return unknown_index_[node]; }

    /// Dual-cell area int phi_i for every unknown row.
    [[nodiscard]] const std::vector<double>& row_masses() const { return row_masses_; }

    friend WeightedOperator assemble_weighted(const CoefficientField& a, double s, PlanarCondition planar);
    friend WeightedOperator assemble_elliptic(const CoefficientField& a);

private:
    WeightedOperator(GridPtr grid, double s, PlanarCondition planar, CsrMatrix full);

    GridPtr grid_;
    double s_;
    PlanarCondition planar_;
    CsrMatrix full_;
    CsrMatrix stiffness_;
    std::vector<std::size_t> unknowns_;
    std::vector<long> unknown_index_;
    std::vector<double> row_masses_;
};

/// Operator for div(x_n^s A grad w) on a half grid. Outer nodes are Dirichlet;
/// the two planar corner nodes belong to the closure of the outer boundary and
/// are prescribed too.
[[nodiscard]] WeightedOperator assemble_weighted(const CoefficientField& a, double s,
                                                 PlanarCondition planar = PlanarCondition::natural);

/// Unweighted operator div(A grad u) on any grid with Dirichlet data on every
/// boundary node (outer and planar).
[[nodiscard]] WeightedOperator assemble_elliptic(const CoefficientField& a);

/// Load vector over all nodes for div(x_n^s f) + x_n g, in the sign convention
/// K w = b of the stiffness: b_i = int x_n^s f . grad phi_i - int x_n g phi_i.
[[nodiscard]] std::vector<double> assemble_rhs_full(const Grid& grid, double s, const VectorField& f,
                                                    const GridFunction* g);

/// Load vector restricted to the operator's unknowns.
[[nodiscard]] std::vector<double> assemble_rhs(const WeightedOperator& op, const VectorField& f,
                                               const GridFunction* g = nullptr);

/// Dirichlet values, stored per node; only constrained nodes are read.
struct BoundaryData {
    std::vector<double> values;

    static BoundaryData from_function(const Grid& grid, const std::function<double(double, double)>& f);
    static BoundaryData from_grid_function(const GridFunction& f);
    static BoundaryData constant(const Grid& grid, double c);
};

struct SolveResult {
    GridFunction w;
    std::size_t iterations;
    std::vector<double> residual_history;
};

/// Solves K w = rhs with the prescribed values; throws SolverError when CG
/// does not converge (the error carries the residual history).
[[nodiscard]] SolveResult solve(const WeightedOperator& op, std::span<const double> rhs, const BoundaryData& bd,
                                const CgOptions& options = {});

/// stiffness * w - rhs over unknown rows.
[[nodiscard]] std::vector<double> residual_vector(const WeightedOperator& op, const GridFunction& w,
                                                  std::span<const double> rhs);

/// Euclidean norm of residual_vector.
[[nodiscard]] double residual_norm(const WeightedOperator& op, const GridFunction& w, std::span<const double> rhs);

/// max |residual_i| / row_mass_i: the pointwise residual of
/// div(x_n^s A grad w) - rhs. With `interior_only` the planar row is skipped.
[[nodiscard]] double scaled_residual(const WeightedOperator& op, const GridFunction& w, std::span<const double> rhs,
                                     bool interior_only);

/// w^T K w over all nodes (the discrete int x_n^s grad w^T A grad w).
[[nodiscard]] double discrete_energy(const WeightedOperator& op, const GridFunction& w);

/// sum over constrained nodes c of w_c (K w)_c.
[[nodiscard]] double boundary_pairing(const WeightedOperator& op, const GridFunction& w);

/// int f^2 / int x_n^2 |grad f|^2 for f vanishing on the outer boundary;
/// std::nullopt when the denominator vanishes.
[[nodiscard]] std::optional<double> poincare_ratio(const GridFunction& f);

[[nodiscard]] nlohmann::json to_json(const SolveResult& r);

}  // namespace fbh
