#include "fbh/samples.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace fbh {

GridFunction random_bump_sum(const GridPtr& grid, std::mt19937_64& rng, int bumps) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Bump {
        double c1, cn, r, amp;
    };
    std::vector<Bump> list;
    const double top = grid->xn_max();
    for (int b = 0; b < bumps; ++b) {
        Bump k{};
        k.cn = grid->xn_min() + (top - grid->xn_min()) * 0.8 * unit(rng);
        k.c1 = -0.8 + 1.6 * unit(rng);
        const double room = std::min({1.0 - k.c1, 1.0 + k.c1, top - k.cn});
        k.r = room * (0.3 + 0.7 * unit(rng));
        k.amp = -1.0 + 2.0 * unit(rng);
        list.push_back(k);
    }
    return GridFunction(grid, [&](double x1, double xn) {
        double v = 0.0;
        for (const auto& k : list) {
            const double q = 1.0 - ((x1 - k.c1) * (x1 - k.c1) + (xn - k.cn) * (xn - k.cn)) / (k.r * k.r);
            if (q > 0.0) {
                v += k.amp * q * q;
            }
        }
        return v;
    });
}

GridFunction random_smooth(const GridPtr& grid, std::mt19937_64& rng, int terms, double max_frequency) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Term {
        double a, p, q, phi;
    };
    std::vector<Term> list;
    for (int t = 0; t < terms; ++t) {
        list.push_back({-1.0 + 2.0 * unit(rng), max_frequency * (2.0 * unit(rng) - 1.0),
                        max_frequency * (2.0 * unit(rng) - 1.0), 2.0 * M_PI * unit(rng)});
    }
    return GridFunction(grid, [&](double x1, double xn) {
        double v = 0.0;
        for (const auto& t : list) {
            v += t.a * std::sin(t.p * x1 + t.q * xn + t.phi);
        }
        return v;
    });
}

namespace {

// Bivariate cubic sum c_{pq} x1^p xn^q, p + q <= 3.
struct Cubic {
    std::array<double, 10> c{};

    static constexpr int px[10] = {0, 1, 0, 2, 1, 0, 3, 2, 1, 0};
    static constexpr int pn[10] = {0, 0, 1, 0, 1, 2, 0, 1, 2, 3};

    double operator()(double x, double y) const {
        double v = 0.0;
        for (int t = 0; t < 10; ++t) {
            v += c[t] * std::pow(x, px[t]) * std::pow(y, pn[t]);
        }
        return v;
    }
    Vec2 grad(double x, double y) const {
        Vec2 g{};
        for (int t = 0; t < 10; ++t) {
            if (px[t] > 0) {
                g.v1 += c[t] * px[t] * std::pow(x, px[t] - 1) * std::pow(y, pn[t]);
            }
            if (pn[t] > 0) {
                g.vn += c[t] * pn[t] * std::pow(x, px[t]) * std::pow(y, pn[t] - 1);
            }
        }
        return g;
    }
};

Cubic random_cubic(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Cubic q;
    for (auto& v : q.c) {
        v = u(rng);
    }
    return q;
}

}  // namespace

RatioProblem random_ratio_problem(std::mt19937_64& rng) {
    const Cubic w = random_cubic(rng, 1.0);
    Cubic u2 = random_cubic(rng, 0.3);
    u2.c[2] += 1.0;  // x_n dominates near the planar side
    const Cubic psi1 = random_cubic(rng, 1.0);
    const Cubic psi2 = random_cubic(rng, 1.0);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    const double a1 = u(rng), a2 = u(rng), a3 = u(rng);
    auto a = [a1, a2, a3](double x, double y) {
        return Sym2{1.0 + a1 * x * x, a2 * x * y, 1.0 + a3 * (x + y)};
    };
    auto apply = [](const Sym2& m, const Vec2& v) {
        return Vec2{m.a11 * v.v1 + m.a12 * v.vn, m.a12 * v.v1 + m.a22 * v.vn};
    };
    RatioProblem p;
    p.w = w;
    p.u2 = u2;
    p.a = a;
    p.f1 = [=](double x, double y) {
        const Vec2 gw = w.grad(x, y);
        const Vec2 gu = u2.grad(x, y);
        const double wv = w(x, y), uv = u2(x, y);
        const Vec2 g{uv * gw.v1 + wv * gu.v1, uv * gw.vn + wv * gu.vn};
        const Vec2 r = psi1.grad(x, y);
        const Vec2 ag = apply(a(x, y), g);
        return Vec2{ag.v1 + r.vn, ag.vn - r.v1};
    };
    p.f2 = [=](double x, double y) {
        const Vec2 r = psi2.grad(x, y);
        const Vec2 ag = apply(a(x, y), u2.grad(x, y));
        return Vec2{ag.v1 + r.vn, ag.vn - r.v1};
    };
    return p;
}

}  // namespace fbh
