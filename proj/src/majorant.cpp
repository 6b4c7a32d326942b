#include "fbh/majorant.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fbh::majorant {

namespace {

template <class T>
T from_rational(const Rational& r) {
    if constexpr (std::is_same_v<T, Rational>) {
        return r;
    } else {
        return r.template convert_to<double>();
    }
}

boost::multiprecision::cpp_int parse_integer(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw InvalidArgument("malformed number '" + s + "'");
    }
    return boost::multiprecision::cpp_int(s);
}

// [-]digits[.digits][e[+-]digits], read exactly.
Rational parse_decimal(const std::string& text) {
    std::string s = text;
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        negative = s[0] == '-';
        s.erase(0, 1);
    }
    long exponent = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string::npos) {
        try {
            exponent = std::stol(s.substr(e + 1));
        } catch (const std::exception&) {
            throw InvalidArgument("malformed number '" + text + "'");
        }
        s.erase(e);
    }
    std::string digits = s;
    if (const auto dot = s.find('.'); dot != std::string::npos) {
        digits = s.substr(0, dot) + s.substr(dot + 1);
        exponent -= static_cast<long>(s.size() - dot - 1);
    }
    if (digits.empty()) {
        throw InvalidArgument("malformed number '" + text + "'");
    }
    Rational r(parse_integer(digits));
    const Rational ten(10);
    for (long i = 0; i < std::labs(exponent); ++i) {
        r = exponent > 0 ? r * ten : r / ten;
    }
    return negative ? Rational(-r) : r;
}

template <class T>
Series<T> all_infinite(int N) {
    return Series<T>(std::vector<Coef<T>>(static_cast<std::size_t>(N) + 1, Coef<T>::infinity()));
}

template <class T>
ClosedForm<T> closed_form_of(const Expr& e) {
    switch (e.family) {
    case Family::geometric:
        return ClosedForm<T>::geometric(from_rational<T>(e.C), from_rational<T>(e.R));
    case Family::exponential:
        return ClosedForm<T>::exponential(from_rational<T>(e.C), from_rational<T>(e.R));
    case Family::polynomial: {
        std::vector<T> c;
        for (const auto& x : e.coeffs) {
            c.push_back(from_rational<T>(x));
        }
        return ClosedForm<T>::polynomial(std::move(c));
    }
    }
    throw InvalidArgument("unknown closed-form family");
}

Family family_of(const std::string& op) {
    if (op == "geometric") {
        return Family::geometric;
    }
    if (op == "exponential") {
        return Family::exponential;
    }
    return Family::polynomial;
}

nlohmann::json rational_json(const Rational& r) { return r.str(); }

}  // namespace

template <class T>
ClosedForm<T> recenter(const ClosedForm<T>& f, const T& a) {
    if (a < 0) {
        throw InvalidArgument("recentring point must be non-negative");
    }
    switch (f.family) {
    case Family::geometric:
        if (!(a < f.R)) {
            throw InvalidArgument("recentring point at or beyond the geometric pole");
        }
        return ClosedForm<T>::geometric(f.C, f.R - a);
    case Family::exponential:
        if (a == 0) {
            return f;
        }
        if constexpr (std::is_same_v<T, Rational>) {
            throw InvalidArgument("exponential recentring at a non-zero point has no exact rational value");
        } else {
            return ClosedForm<T>::exponential(f.C * std::exp(a / f.R), f.R);
        }
    case Family::polynomial: {
        // p(t + a) = sum_j c_j sum_i binom(j, i) a^{j-i} t^i
        const std::size_t d = f.coeffs.size();
        std::vector<T> out(d, T(0));
        for (std::size_t j = 0; j < d; ++j) {
            T binom(1);
            for (std::size_t i = 0; i <= j; ++i) {
                T apow(1);
                for (std::size_t m = 0; m < j - i; ++m) {
                    apow *= a;
                }
                out[i] += f.coeffs[j] * binom * apow;
                binom = binom * T(static_cast<long>(j - i)) / T(static_cast<long>(i + 1));
            }
        }
        return ClosedForm<T>::polynomial(std::move(out));
    }
    }
    throw InvalidArgument("unknown closed-form family");
}

Rational parse_rational(const nlohmann::json& j) {
    if (j.is_number_integer()) {
        return j.is_number_unsigned() ? Rational(j.get<std::uint64_t>()) : Rational(j.get<std::int64_t>());
    }
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            throw InvalidArgument("non-finite number");
        }
        // Shortest round-trip text, so 0.1 reads as 1/10.
        return parse_decimal(nlohmann::json(v).dump());
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (const auto slash = s.find('/'); slash != std::string::npos) {
            const Rational den = parse_decimal(s.substr(slash + 1));
            if (den == 0) {
                throw InvalidArgument("zero denominator in '" + s + "'");
            }
            return parse_decimal(s.substr(0, slash)) / den;
        }
        return parse_decimal(s);
    }
    throw InvalidArgument("expected a number or a \"p/q\" string, got " + j.dump());
}

Expr parse_expr(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidArgument("right-hand-side node must be an object: " + j.dump());
    }
    Expr e;
    auto expect_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : j.items()) {
            bool ok = false;
            for (const char* a : allowed) {
                ok = ok || key == a;
            }
            if (!ok) {
                throw InvalidArgument("unknown key '" + key + "' in right-hand-side node " + j.dump());
            }
        }
    };
    if (j.contains("const")) {
        expect_keys({"const"});
        const auto& c = j.at("const");
        if (c.is_string() && c.get<std::string>() == "inf") {
            e.inf = true;
        } else {
            e.value = parse_rational(c);
            if (e.value < 0) {
                throw InvalidArgument("right-hand-side constants must be non-negative");
            }
        }
        return e;
    }
    if (j.contains("var")) {
        expect_keys({"var"});
        const auto v = j.at("var").get<std::string>();
        if (v == "t") {
            e.kind = Expr::Kind::var_t;
        } else if (v == "Pi") {
            e.kind = Expr::Kind::var_pi;
        } else if (v == "Omega") {
            e.kind = Expr::Kind::var_omega;
        } else {
            throw InvalidArgument("unknown variable '" + v + "' (expected t, Pi or Omega)");
        }
        return e;
    }
    if (!j.contains("op")) {
        throw InvalidArgument("right-hand-side node needs one of const, var or op: " + j.dump());
    }
    const auto op = j.at("op").get<std::string>();
    if (op == "add" || op == "mul") {
        expect_keys({"op", "args"});
        e.kind = op == "add" ? Expr::Kind::add : Expr::Kind::mul;
        for (const auto& a : j.at("args")) {
            e.args.push_back(parse_expr(a));
        }
        if (e.args.empty()) {
            throw InvalidArgument("'" + op + "' needs at least one argument");
        }
        return e;
    }
    if (op == "drop_constant") {
        expect_keys({"op", "arg"});
        e.kind = Expr::Kind::drop_constant;
        e.args.push_back(parse_expr(j.at("arg")));
        return e;
    }
    if (op == "geometric" || op == "exponential" || op == "polynomial") {
        e.kind = Expr::Kind::closed;
        e.family = family_of(op);
        if (op == "polynomial") {
            expect_keys({"op", "coeffs", "arg"});
            for (const auto& c : j.at("coeffs")) {
                e.coeffs.push_back(parse_rational(c));
            }
        } else {
            expect_keys({"op", "C", "R", "arg"});
            e.C = parse_rational(j.at("C"));
            e.R = parse_rational(j.at("R"));
        }
        closed_form_of<Rational>(e);  // validates the parameters
        Expr t;
        t.kind = Expr::Kind::var_t;
        e.args.push_back(j.contains("arg") ? parse_expr(j.at("arg")) : t);
        return e;
    }
    throw InvalidArgument("unknown right-hand-side operation '" + op + "'");
}

nlohmann::json to_json(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::constant:
        return {{"const", e.inf ? nlohmann::json("inf") : rational_json(e.value)}};
    case Expr::Kind::var_t:
        return {{"var", "t"}};
    case Expr::Kind::var_pi:
        return {{"var", "Pi"}};
    case Expr::Kind::var_omega:
        return {{"var", "Omega"}};
    case Expr::Kind::add:
    case Expr::Kind::mul: {
        nlohmann::json args = nlohmann::json::array();
        for (const auto& a : e.args) {
            args.push_back(to_json(a));
        }
        return {{"op", e.kind == Expr::Kind::add ? "add" : "mul"}, {"args", args}};
    }
    case Expr::Kind::drop_constant:
        return {{"op", "drop_constant"}, {"arg", to_json(e.args.at(0))}};
    case Expr::Kind::closed: {
        nlohmann::json j{{"op", to_string(e.family)}, {"arg", to_json(e.args.at(0))}};
        if (e.family == Family::polynomial) {
            nlohmann::json c = nlohmann::json::array();
            for (const auto& x : e.coeffs) {
                c.push_back(rational_json(x));
            }
            j["coeffs"] = c;
        } else {
            j["C"] = rational_json(e.C);
            j["R"] = rational_json(e.R);
        }
        return j;
    }
    }
    return {};
}

template <class T>
Series<T> evaluate(const Expr& e, const Series<T>& pi, const Series<T>& omega, int N) {
    switch (e.kind) {
    case Expr::Kind::constant:
        return constant_series(e.inf ? Coef<T>::infinity() : Coef<T>{from_rational<T>(e.value), false}, N);
    case Expr::Kind::var_t:
        return Series<T>::monomial(1, T(1), N);
    case Expr::Kind::var_pi:
        return pi.truncated(N);
    case Expr::Kind::var_omega:
        return omega.truncated(N);
    case Expr::Kind::add: {
        auto s = Series<T>::zero(N);
        for (const auto& a : e.args) {
            s = add(s, evaluate(a, pi, omega, N));
        }
        return s;
    }
    case Expr::Kind::mul: {
        auto s = Series<T>::monomial(0, T(1), N);
        for (const auto& a : e.args) {
            s = mul(s, evaluate(a, pi, omega, N));
        }
        return s;
    }
    case Expr::Kind::drop_constant:
        return evaluate(e.args.at(0), pi, omega, N).without_constant();
    case Expr::Kind::closed: {
        const auto inner = evaluate(e.args.at(0), pi, omega, N);
        const auto cf = closed_form_of<T>(e);
        const Coef<T> a = inner[0];
        if (a.inf || (cf.family == Family::geometric && !(a.value < cf.R))) {
            return all_infinite<T>(N);
        }
        return compose(recenter(cf, a.value).expand(N), inner.without_constant());
    }
    }
    throw InvalidArgument("malformed right-hand side");
}

template <class T>
std::pair<Series<T>, Series<T>> ode_solve(const Expr& M, const Expr& Nexpr, const T& pi0, const T& omega0,
                                          int order) {
    if (order < 1) {
        throw InvalidArgument("ODE truncation order must be at least 1");
    }
    if (pi0 < 0 || omega0 < 0) {
        throw InvalidArgument("initial values must be non-negative");
    }
    std::vector<Coef<T>> p(static_cast<std::size_t>(order) + 1), o(p.size());
    p[0] = {pi0, false};
    o[0] = {omega0, false};
    for (int k = 0; k < order; ++k) {
        // Coefficients above k are still zero, and order k of every operation
        // only reads orders <= k, so evaluating at max(k, 1) is exact.
        const int n = std::max(k, 1);
        const Series<T> ps = Series<T>(p).truncated(n);
        const Series<T> os = Series<T>(o).truncated(n);
        const Coef<T> dm = evaluate(M, ps, os, n)[k];
        const Coef<T> dn = evaluate(Nexpr, ps, os, n)[k];
        if (dm.inf || dn.inf) {
            throw InfiniteCoefficient("right-hand side has an infinite coefficient at order " + std::to_string(k), k);
        }
        o[k + 1] = {dm.value / T(k + 1), false};
        p[k + 1] = {dn.value / T(k + 1), false};
    }
    return {Series<T>(std::move(p)), Series<T>(std::move(o))};
}

Series<double> to_double(const Series<Rational>& f) {
    std::vector<Coef<double>> c;
    for (const auto& a : f.coeffs()) {
        c.push_back({a.inf ? 0.0 : a.value.convert_to<double>(), a.inf});
    }
    return Series<double>(std::move(c));
}

double radius_estimate(const Series<double>& f, RadiusMethod method) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int N = f.order();
    for (const auto& a : f.coeffs()) {
        if (a.inf) {
            return 0.0;
        }
    }
    if (f[N].value == 0.0 && f[N - 1].value == 0.0) {
        return inf;
    }
    auto median3 = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    std::vector<double> est;
    if (method == RadiusMethod::root) {
        std::vector<int> usable;
        for (int k = 1; k <= N; ++k) {
            if (f[k].value > 0.0) {
                usable.push_back(k);
            }
        }
        if (usable.size() < 6) {
            throw InvalidArgument("root radius estimate needs at least 6 non-zero coefficients (got " +
                                  std::to_string(usable.size()) + ")");
        }
        for (std::size_t i = usable.size() - 3; i < usable.size(); ++i) {
            const int k = usable[i];
            est.push_back(std::pow(f[k].value, 1.0 / k));
        }
        const double m = median3(est);
        const double r = m > 0.0 ? 1.0 / m : inf;
        return r > 1e6 ? inf : r;
    }
    for (int k = N - 1; k >= 0 && est.size() < 3; --k) {
        if (f[k].value > 0.0 && f[k + 1].value > 0.0) {
            est.push_back(f[k].value / f[k + 1].value);
        }
    }
    if (est.empty()) {
        throw InvalidArgument("ratio radius estimate needs two consecutive non-zero coefficients");
    }
    const double r = median3(est);
    return r > 1e6 ? inf : r;
}

double radius_estimate(const Series<Rational>& f, RadiusMethod method) {
    for (const auto& a : f.coeffs()) {
        if (a.inf) {
            return 0.0;
        }
    }
    return radius_estimate(to_double(f), method);
}

nlohmann::json to_json(const Series<double>& f) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& a : f.coeffs()) {
        c.push_back(a.inf ? nlohmann::json("inf") : nlohmann::json(a.value));
    }
    return {{"N", f.order()}, {"coeffs", c}};
}

nlohmann::json to_json(const Series<Rational>& f) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& a : f.coeffs()) {
        c.push_back(a.inf ? nlohmann::json("inf") : rational_json(a.value));
    }
    return {{"N", f.order()}, {"coeffs", c}};
}

Series<double> series_from_json(const nlohmann::json& j) {
    std::vector<Coef<double>> c;
    for (const auto& x : j.at("coeffs")) {
        if (x.is_string() && x.get<std::string>() == "inf") {
            c.push_back(Coef<double>::infinity());
        } else if (x.is_number()) {
            c.push_back({x.get<double>(), false});
        } else {
            c.push_back({parse_rational(x).convert_to<double>(), false});
        }
    }
    if (j.contains("N") && j.at("N").get<int>() + 1 != static_cast<int>(c.size())) {
        throw InvalidArgument("series N does not match the number of coefficients");
    }
    return Series<double>(std::move(c));
}

void write_csv(std::ostream& os, const Series<double>& f) {
    os << "k,a_k,a_k_times_kfact\n" << std::setprecision(17);
    double fact = 1.0;
    for (int k = 0; k <= f.order(); ++k) {
        if (k > 0) {
            fact *= k;
        }
        if (f[k].inf) {
            os << k << ",inf,inf\n";
        } else {
            os << k << ',' << f[k].value << ',' << f[k].value * fact << '\n';
        }
    }
}

void write_csv(std::ostream& os, const Series<Rational>& f) {
    os << "k,a_k,a_k_times_kfact\n";
    Rational fact(1);
    for (int k = 0; k <= f.order(); ++k) {
        if (k > 0) {
            fact *= k;
        }
        if (f[k].inf) {
            os << k << ",inf,inf\n";
        } else {
            os << k << ',' << f[k].value.str() << ',' << Rational(f[k].value * fact).str() << '\n';
        }
    }
}

std::string to_string(RadiusMethod m) { return m == RadiusMethod::root ? "root" : "ratio"; }

std::string to_string(Family f) {
    switch (f) {
    case Family::geometric:
        return "geometric";
    case Family::exponential:
        return "exponential";
    case Family::polynomial:
        return "polynomial";
    }
    return "?";
}

template ClosedForm<double> recenter(const ClosedForm<double>&, const double&);
template ClosedForm<Rational> recenter(const ClosedForm<Rational>&, const Rational&);
template Series<double> evaluate(const Expr&, const Series<double>&, const Series<double>&, int);
template Series<Rational> evaluate(const Expr&, const Series<Rational>&, const Series<Rational>&, int);
template std::pair<Series<double>, Series<double>> ode_solve(const Expr&, const Expr&, const double&, const double&,
                                                             int);
template std::pair<Series<Rational>, Series<Rational>> ode_solve(const Expr&, const Expr&, const Rational&,
                                                                 const Rational&, int);

}  // namespace fbh::majorant
