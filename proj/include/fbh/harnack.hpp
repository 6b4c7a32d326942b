#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbh/fields.hpp"
#include "fbh/grid.hpp"
#include "fbh/straighten.hpp"

namespace fbh {

/// Discrete lower bound of u / x_n: the minimum of u/x_n over non-planar
/// nodes and of the one-sided quotient (u(x',h) - u(x',0))/h on the planar row.
[[nodiscard]] double hopf_floor(const GridFunction& u);

/// u / x_n with the planar row replaced by the one-sided quotient.
[[nodiscard]] GridFunction divide_by_xn(const GridFunction& u);

/// w = u1 / u2, with the planar row given by the quotient of one-sided x_n
/// differences. Throws HypothesisViolation (value = floor) unless
/// hopf_floor(u2) >= floor_tol > 0.
[[nodiscard]] GridFunction ratio(const GridFunction& u1, const GridFunction& u2, double floor_tol);

/// Residual of div(u2^2 A grad w) = div(u2 f1 - u1 f2) + (f2 . grad u1 - f1 . grad u2)
/// with u1 = w u2, in flux form with nodal gradients by central differences.
/// Returns max over interior rows of |residual| / dual-cell area.
[[nodiscard]] double ratio_residual(const GridFunction& w, const GridFunction& u2, const CoefficientField& a,
                                    const VectorField& f1, const VectorField& f2);

/// Gradient of b^{pq} in y: returns (d/dy_1 B, d/dy_n B).
using MatrixGradient = std::function<std::array<Sym2, 2>(double, double)>;

/// Central differences of `b` with step 1e-5.
[[nodiscard]] MatrixGradient numerical_gradient(const MatrixFunction& b);

struct RatioSystemFields {
    CoefficientField A;       // transformed coefficients J B J^T
    CoefficientField Atilde;  // (u_n / x_n)^2 A
    VectorField F;
    GridFunction G;
    VectorField H;
};

/// Fields of the system div(x_n^2 Atilde grad w_k) = div(x_n^2 F) + x_n G and
/// div(A grad u_k) = -div(H) for w_k = u_k / u_n (n = 2, so k = 1).
/// `u` holds u_1 .. u_n as grid functions in x on a common half grid.
[[nodiscard]] RatioSystemFields build_ratio_system(const std::vector<GridFunction>& u, const CurveModel& c,
                                                   const MatrixFunction& b, const MatrixGradient& grad_b, int k);

/// max over sampled node pairs in `region` of |f(x) - f(y)| / |x - y|^alpha.
/// All pairs up to 2000 nodes; above that, pairs at dyadic index offsets
/// along the axes and diagonals plus the extreme corners.
[[nodiscard]] double holder_seminorm(const GridFunction& f, double alpha, const Region& region);
/// Same with the Euclidean norm of vector differences.
[[nodiscard]] double holder_seminorm(const VectorField& f, double alpha, const Region& region);

enum class CampanatoMode { l2fit, replacement };

struct CampanatoReport {
    double S;
    double alpha;
    int K;
    CampanatoMode mode;
    std::vector<double> scale;  // S^k
    std::vector<double> sigma;
    std::vector<double> chi;
    /// Limiting polynomial P = p0 + p1 x_1 (+ 0 x_n).
    double p0, p1;
    double pn = 0.0;
    /// Least-squares slope of log sigma_k against k over k >= 1 with
    /// sigma_k > 0; empty with fewer than two such scales.
    std::optional<double> fitted_decay;

    /// Mean of sigma_{k+1}/sigma_k over k >= 1 with sigma_k > 0.
    [[nodiscard]] std::optional<double> mean_ratio() const;
};

/// Campanato iteration on the half grid: regions R_k = [-S^k, S^k] x [0, S^k],
/// l_k vertically constant, w_{k+1} = w_k - l_k, f_{k+1} = f_k + (I - A) grad l_k,
/// sigma_k^2 = S^{-k(4 + 2 alpha)} int_{R_k} w_k^2 and chi_k = [f_k]_alpha on R_k.
/// `a` defaults to the identity. Requires 0 < S <= 1/2, 0 < alpha < 1 and
/// S^K >= 4 max(h1, h2).
[[nodiscard]] CampanatoReport campanato_scan(const GridFunction& w, const VectorField& f, double alpha, double S,
                                             int K, CampanatoMode mode = CampanatoMode::l2fit,
                                             const CoefficientField* a = nullptr);

/// Largest K with S^K >= 4 max(h1, h2).
[[nodiscard]] int max_campanato_scales(const Grid& grid, double S);

struct GlobalNormSpec {
    int k = 1;
    double alpha = 0.5;
    int b = 0;
    int l = 1;
    int k_max = 6;
};

struct GlobalNormResult {
    double value;
    std::size_t centers;          // centres evaluated
    std::size_t skipped_centers;  // ball radius below k grid steps
};

/// Discrete [f]^{*,l}_{C_b^{k,alpha}}: sup over a subsample of centres X of
/// Delta^l max_beta (sup |D^beta f| + Delta^alpha [D^beta f]_alpha) on the
/// half-ball of radius Delta/(l+1), Delta the distance to the outer boundary,
/// |beta| = k with at most b normal derivatives.
[[nodiscard]] GlobalNormResult global_norm_coeff(const GridFunction& f, const GlobalNormSpec& spec,
                                                 int max_centers_per_axis = 33);

/// d^{b1+bn} f / dx_1^{b1} dx_n^{bn} by repeated second-order differences.
[[nodiscard]] GridFunction grid_derivative(const GridFunction& f, int b1, int bn);

struct AnalyticityReport {
    int requested_order;
    int order;  // after automatic reduction
    double window;
    double center = 0.0;
    std::vector<double> coefficients;  // c_k = |gamma^(k)(center)| / k!
    /// Above the noise floor: 10 standard errors of the fit, 1e-10 of the
    /// largest coefficient and 1e-8 of max(window, max |gamma|) in contribution.
    std::vector<bool> usable;
    double residual_rms;
    double condition;                  // of the unscaled Vandermonde matrix
    /// +inf when fewer than two usable orders >= 1 remain.
    double radius;
    std::vector<std::string> warnings;
};

/// Least-squares Taylor fit of gamma on [center - window, center + window].
[[nodiscard]] AnalyticityReport analyticity_scan(const std::vector<double>& x, const std::vector<double>& gamma,
                                                 int Kmax, double window, double center = 0.0);
/// Samples the model at 8 Kmax + 1 equispaced points of the window.
[[nodiscard]] AnalyticityReport analyticity_scan(const CurveModel& c, int Kmax, double window);

/// Largest half-width w (up to the sampled range) with |gamma'| <= max_slope
/// on [center - w, center + w], from the curve's spline on a fine sampling.
[[nodiscard]] double slope_limited_window(const FreeBoundaryCurve& curve, double max_slope = 1.0,
                                          double center = 0.0);

// Serialization.
[[nodiscard]] nlohmann::json to_json(const CampanatoReport& r);
void write_csv(std::ostream& os, const CampanatoReport& r);
[[nodiscard]] nlohmann::json to_json(const AnalyticityReport& r);
[[nodiscard]] nlohmann::json to_json(const GlobalNormResult& r);
[[nodiscard]] std::string to_string(CampanatoMode m);

}  // namespace fbh
