#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "fbh/errors.hpp"

namespace fbh::majorant {

// Expression templates off: generic code stores intermediate results in `auto`.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

/// Coefficient in [0, +inf]. 0 * inf = 0, x * inf = inf for x > 0, inf + x = inf.
template <class T>
struct Coef {
    T value{0};
    bool inf = false;

    static Coef infinity() { return {T(0), true}; }
    [[nodiscard]] bool is_zero() const { return !inf && value == 0; }

    friend Coef operator+(const Coef& a, const Coef& b) {
        if (a.inf || b.inf) {
            return infinity();
        }
        return {a.value + b.value, false};
    }
    friend Coef operator*(const Coef& a, const Coef& b) {
        if (a.is_zero() || b.is_zero()) {
            return {};
        }
        if (a.inf || b.inf) {
            return infinity();
        }
        return {a.value * b.value, false};
    }
    friend bool operator==(const Coef& a, const Coef& b) {
        return a.inf == b.inf && (a.inf || a.value == b.value);
    }
    /// a <= b in [0, inf].
    [[nodiscard]] bool below(const Coef& b) const { return b.inf || (!inf && value <= b.value); }
};

/// Truncated power series sum a_k t^k, k = 0..N, with a_k in [0, inf]. N >= 1.
template <class T>
class Series {
public:
    explicit Series(std::vector<Coef<T>> coeffs) : c_(std::move(coeffs)) {
        if (c_.size() < 2) {
            throw InvalidArgument("a majorant series needs truncation order N >= 1");
        }
        for (const auto& a : c_) {
            if (!a.inf && a.value < 0) {
                throw InvalidArgument("majorant coefficients must be non-negative");
            }
        }
    }
    static Series zero(int N) { return Series(std::vector<Coef<T>>(static_cast<std::size_t>(N) + 1)); }
    static Series from_values(const std::vector<T>& v) {
        std::vector<Coef<T>> c;
        for (const auto& x : v) {
            c.push_back({x, false});
        }
        return Series(std::move(c));
    }
    /// c t^k truncated at N.
    static Series monomial(int k, const T& c, int N) {
        auto s = zero(N);
        if (k <= N) {
            s.c_[k] = {c, false};
        }
        return s;
    }

    [[nodiscard]] int order() const { return static_cast<int>(c_.size()) - 1; }
    [[nodiscard]] const Coef<T>& operator[](int k) const { return c_[k]; }
    [[nodiscard]] const std::vector<Coef<T>>& coeffs() const { return c_; }
    [[nodiscard]] Series truncated(int N) const {
        std::vector<Coef<T>> c(c_.begin(), c_.begin() + std::min<std::size_t>(c_.size(), N + 1));
        c.resize(static_cast<std::size_t>(N) + 1);
        return Series(std::move(c));
    }
    /// Drops the constant term.
    [[nodiscard]] Series without_constant() const {
        auto c = c_;
        c[0] = {};
        return Series(std::move(c));
    }

    friend bool operator==(const Series& a, const Series& b) { return a.c_ == b.c_; }

private:
    std::vector<Coef<T>> c_;
};

template <class T>
Series<T> constant_series(const Coef<T>& c, int N) {
    std::vector<Coef<T>> v(static_cast<std::size_t>(N) + 1);
    v[0] = c;
    return Series<T>(std::move(v));
}

/// Coefficient-wise sum, truncated at the smaller order.
template <class T>
Series<T> add(const Series<T>& f, const Series<T>& g) {
    const int n = std::min(f.order(), g.order());
    std::vector<Coef<T>> c(n + 1);
    for (int k = 0; k <= n; ++k) {
        c[k] = f[k] + g[k];
    }
    return Series<T>(std::move(c));
}

/// Truncated Cauchy product.
template <class T>
Series<T> mul(const Series<T>& f, const Series<T>& g) {
    const int n = std::min(f.order(), g.order());
    std::vector<Coef<T>> c(n + 1);
    for (int k = 0; k <= n; ++k) {
        Coef<T> s{};
        for (int i = 0; i <= k; ++i) {
            s = s + f[i] * g[k - i];
        }
        c[k] = s;
    }
    return Series<T>(std::move(c));
}

template <class T>
Series<T> scale(const Coef<T>& a, const Series<T>& f) {
    std::vector<Coef<T>> c(f.coeffs().size());
    for (int k = 0; k <= f.order(); ++k) {
        c[k] = a * f[k];
    }
    return Series<T>(std::move(c));
}

/// f << g: f_k <= g_k for every k. Requires equal truncation orders.
template <class T>
bool majorizes(const Series<T>& g, const Series<T>& f) {
    if (f.order() != g.order()) {
        throw InvalidArgument("majorization compares series of equal truncation order");
    }
    for (int k = 0; k <= f.order(); ++k) {
        if (!f[k].below(g[k])) {
            return false;
        }
    }
    return true;
}

/// t g(t) + C at the order of g.
template <class T>
Series<T> integrate_rule(const Series<T>& g, const T& C) {
    if (C < 0) {
        throw InvalidArgument("integration constant must be non-negative");
    }
    std::vector<Coef<T>> c(g.coeffs().size());
    c[0] = {C, false};
    for (int k = 1; k <= g.order(); ++k) {
        c[k] = g[k - 1];
    }
    return Series<T>(std::move(c));
}

/// g(f(t)) for f_0 = 0 by Horner substitution g_0 + f (g_1 + f (g_2 + ...)).
/// Raising the truncation order only adds exact zeros below the old order, so
/// lower coefficients are reproduced bit for bit.
template <class T>
Series<T> compose(const Series<T>& g, const Series<T>& f) {
    if (!f[0].is_zero()) {
        throw InvalidArgument("composition needs an inner series with zero constant term");
    }
    const int n = std::min(f.order(), g.order());
    const Series<T> inner = f.truncated(n);
    std::vector<Coef<T>> c(n + 1);
    c[0] = g[n];
    Series<T> h(std::move(c));
    for (int j = n - 1; j >= 0; --j) {
        h = add(mul(inner, h), constant_series(g[j], n));
    }
    return h;
}

enum class Family { geometric, exponential, polynomial };

/// C / (R - t), C e^{t/R} or a coefficient list.
template <class T>
struct ClosedForm {
    Family family;
    T C{1};
    T R{1};
    std::vector<T> coeffs;

    static ClosedForm geometric(const T& C, const T& R) { return checked({Family::geometric, C, R, {}}); }
    static ClosedForm exponential(const T& C, const T& R) { return checked({Family::exponential, C, R, {}}); }
    static ClosedForm polynomial(std::vector<T> c) {
        for (const auto& x : c) {
            if (x < 0) {
                throw InvalidArgument("polynomial majorant coefficients must be non-negative");
            }
        }
        return {Family::polynomial, T(1), T(1), std::move(c)};
    }

    [[nodiscard]] Series<T> expand(int N) const {
        std::vector<Coef<T>> c(static_cast<std::size_t>(N) + 1);
        switch (family) {
        case Family::geometric: {
            T a = C / R;  // C / R^{k+1}
            for (int k = 0; k <= N; ++k) {
                c[k] = {a, false};
                a /= R;
            }
            break;
        }
        case Family::exponential: {
            T a = C;  // C / (k! R^k)
            for (int k = 0; k <= N; ++k) {
                c[k] = {a, false};
                a /= R * (k + 1);
            }
            break;
        }
        case Family::polynomial:
            for (std::size_t k = 0; k < coeffs.size() && k <= static_cast<std::size_t>(N); ++k) {
                c[k] = {coeffs[k], false};
            }
            break;
        }
        return Series<T>(std::move(c));
    }

private:
    static ClosedForm checked(ClosedForm f) {
        if (!(f.C > 0) || !(f.R > 0)) {
            throw InvalidArgument("closed-form parameters C and R must be positive");
        }
        return f;
    }
};

/// The closed form re-expanded about t = a: F(t + a).
template <class T>
ClosedForm<T> recenter(const ClosedForm<T>& f, const T& a);

/// 2 gbar(f) for a caller-supplied gbar majorizing the outer function and
/// its derivatives; the factor 2 is only valid when the inner map has C^1
/// seminorm at most 2, which the caller asserts through the flag (throws
/// HypothesisViolation when it is false).
template <class T>
Series<T> composition_bound(const ClosedForm<T>& gbar, const Series<T>& f, bool c1_seminorm_at_most_2) {
    if (!c1_seminorm_at_most_2) {
        throw HypothesisViolation("composition bound needs a C^1 seminorm of at most 2", 0.0);
    }
    if (f[0].inf) {
        throw InvalidArgument("composition bound needs a finite inner constant term");
    }
    const auto shifted = recenter(gbar, f[0].value);
    return scale(Coef<T>{T(2), false}, compose(shifted.expand(f.order()), f.without_constant()));
}

/// Right-hand side description over t, Pi and Omega.
struct Expr {
    enum class Kind { constant, var_t, var_pi, var_omega, add, mul, closed, drop_constant };
    Kind kind = Kind::constant;
    Rational value = 0;  // constant
    bool inf = false;    // constant
    Family family = Family::geometric;
    Rational C = 1, R = 1;
    std::vector<Rational> coeffs;
    std::vector<Expr> args;
};

/// JSON forms: {"const": x | "p/q" | "inf"}, {"var": "t" | "Pi" | "Omega"},
/// {"op": "add" | "mul", "args": [...]}, {"op": "drop_constant", "arg": e},
/// {"op": "geometric" | "exponential", "C": x, "R": x, "arg": e} and
/// {"op": "polynomial", "coeffs": [...], "arg": e}. "arg" defaults to t.
[[nodiscard]] Expr parse_expr(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const Expr& e);

/// Exact value of a JSON number or a "p/q" / decimal string.
[[nodiscard]] Rational parse_rational(const nlohmann::json& j);

/// Expansion at order N. A closed form applied to an argument with constant
/// term a is recentred at a and composed with the argument minus a; at or
/// beyond a geometric pole every coefficient is infinite.
template <class T>
Series<T> evaluate(const Expr& e, const Series<T>& pi, const Series<T>& omega, int N);

/// Omega' = M(t, Pi, Omega), Pi' = Nexpr(t, Pi, Omega) by the coefficient recurrence
/// a_{k+1} = [rhs]_k / (k + 1). Throws InfiniteCoefficient with the order k
/// at which a right-hand-side coefficient is infinite.
template <class T>
std::pair<Series<T>, Series<T>> ode_solve(const Expr& M, const Expr& Nexpr, const T& pi0, const T& omega0, int order);

enum class RadiusMethod { root, ratio };

/// root: 1 / median(a_k^{1/k}) over the last three finite non-zero orders
/// (needs six such orders); ratio: median of a_k / a_{k+1} over the last
/// three consecutive pairs. +inf when the trailing coefficients vanish or the
/// estimate exceeds 1e6; 0 when a coefficient is infinite.
[[nodiscard]] double radius_estimate(const Series<double>& f, RadiusMethod method);
[[nodiscard]] double radius_estimate(const Series<Rational>& f, RadiusMethod method);

[[nodiscard]] Series<double> to_double(const Series<Rational>& f);

[[nodiscard]] nlohmann::json to_json(const Series<double>& f);
[[nodiscard]] nlohmann::json to_json(const Series<Rational>& f);
[[nodiscard]] Series<double> series_from_json(const nlohmann::json& j);
/// Columns k, a_k, a_k_times_kfact.
void write_csv(std::ostream& os, const Series<double>& f);
void write_csv(std::ostream& os, const Series<Rational>& f);

[[nodiscard]] std::string to_string(RadiusMethod m);
[[nodiscard]] std::string to_string(Family f);

}  // namespace fbh::majorant
