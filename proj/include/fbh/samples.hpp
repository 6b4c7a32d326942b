#pragma once

#include <random>

#include "fbh/fields.hpp"
#include "fbh/grid.hpp"

namespace fbh {

/// Sum of `bumps` random smooth bumps (1 - |x - c|^2 / r^2)_+^2 whose supports
/// stay inside the outer boundary. Centres may sit on the planar side, so the
/// result has zero outer trace but arbitrary planar values.
[[nodiscard]] GridFunction random_bump_sum(const GridPtr& grid, std::mt19937_64& rng, int bumps = 3);

/// Random trigonometric polynomial sum_k a_k sin(p_k x1 + q_k xn + phi_k)
/// with frequencies up to `max_frequency`.
[[nodiscard]] GridFunction random_smooth(const GridPtr& grid, std::mt19937_64& rng, int terms = 4,
                                         double max_frequency = 4.0);

/// Closed-form data for the quotient identity: u2, w and A are polynomials,
/// u1 = w u2 and f_i = A grad u_i + rot psi_i with random quadratic psi_i, so
/// div(A grad u_i) = div(f_i) holds exactly.
struct RatioProblem {
    std::function<double(double, double)> w, u2;
    std::function<Sym2(double, double)> a;
    std::function<Vec2(double, double)> f1, f2;
};
[[nodiscard]] RatioProblem random_ratio_problem(std::mt19937_64& rng);

}  // namespace fbh
