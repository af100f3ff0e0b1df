// Riemann sphere points and the chordal metric.
//
// Every module measures proximity in the chordal metric so that poles,
// escape to infinity and cycles through infinity are handled uniformly.

#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <json.hpp>

namespace biflab {

using cplx = std::complex<double>;

// A point of the Riemann sphere: a finite complex number or the point at
// infinity. Finite points never carry NaN/Inf components; overflow must be
// routed through normalize() by the caller.
struct SpherePoint {
    cplx z{0.0, 0.0};
    bool inf = false;

    SpherePoint() = default;

    static SpherePoint finite(cplx v) { return SpherePoint{v, false}; }
    static SpherePoint finite(double re, double im = 0.0) { return SpherePoint{cplx(re, im), false}; }
    static SpherePoint infinity() { return SpherePoint{cplx(0.0, 0.0), true}; }

    bool is_inf() const { return inf; }
    bool is_finite() const { return !inf; }

    // Finite-chart value; only meaningful when is_finite().
    cplx value() const { return z; }

    friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.z == b.z;
    }

private:
    SpherePoint(cplx v, bool is_infinite) : z(v), inf(is_infinite) {}
};

inline bool is_finite_number(double x) { return std::isfinite(x); }
inline bool is_finite_number(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Chordal distance rho(a,b) = 2|a-b| / (sqrt(1+|a|^2) sqrt(1+|b|^2)),
// rho(a,inf) = 2/sqrt(1+|a|^2). Symmetric, in [0,2], zero iff equal.
// For |a|,|b| > 1 the identity rho(1/a,1/b) = rho(a,b) is used so that the
// numerator cannot overflow for extreme finite inputs.
inline double chordal_distance(const SpherePoint& a, const SpherePoint& b) {
    if (a.is_inf() && b.is_inf()) return 0.0;
    if (a.is_inf() || b.is_inf()) {
        const cplx f = a.is_inf() ? b.value() : a.value();
        return 2.0 / std::hypot(1.0, std::abs(f));
    }
    cplx x = a.value(), y = b.value();
    const double ax = std::abs(x), ay = std::abs(y);
    if (ax > 1.0 && ay > 1.0) {
        // invert both; 0 maps the inversion of a huge modulus faithfully
        x = 1.0 / x;
        y = 1.0 / y;
    }
    const double num = 2.0 * std::abs(x - y);
    const double den = std::hypot(1.0, std::abs(x)) * std::hypot(1.0, std::abs(y));
    return num / den;
}

// Escape-radius policy: any non-finite or too-large value becomes infinity.
inline SpherePoint normalize(cplx z, double escape_radius) {
    if (!is_finite_number(z) || std::abs(z) > escape_radius) return SpherePoint::infinity();
    return SpherePoint::finite(z);
}

inline SpherePoint normalize(const SpherePoint& p, double escape_radius) {
    if (p.is_inf()) return p;
    return normalize(p.value(), escape_radius);
}

inline bool approx_equal(const SpherePoint& a, const SpherePoint& b, double tol) {
    return chordal_distance(a, b) <= tol;
}

// JSON form: {"re": r, "im": i} for finite points, the string "inf" otherwise.
inline void to_json(nlohmann::json& j, const SpherePoint& p) {
    if (p.is_inf()) {
        j = "inf";
    } else {
        j = nlohmann::json{{"re", p.value().real()}, {"im", p.value().imag()}};
    }
}

inline void from_json(const nlohmann::json& j, SpherePoint& p) {
    if (j.is_string() && j.get<std::string>() == "inf") {
        p = SpherePoint::infinity();
    } else {
        p = SpherePoint::finite(j.at("re").get<double>(), j.at("im").get<double>());
    }
}

}  // namespace biflab

namespace nlohmann {
// std::complex lives outside biflab's namespace, so ADL needs a serializer.
template <>
struct adl_serializer<std::complex<double>> {
    static void to_json(json& j, const std::complex<double>& z) {
        j = json{{"re", z.real()}, {"im", z.imag()}};
    }
    static void from_json(const json& j, std::complex<double>& z) {
        z = std::complex<double>(j.at("re").get<double>(), j.at("im").get<double>());
    }
};
}  // namespace nlohmann
