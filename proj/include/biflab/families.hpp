// One-complex-parameter natural families: evaluation, z-derivative, singular
// values with their motions v(lambda), domain/boundary model and the
// exceptionality classification. Built-ins: quadratic, exponential, tangent,
// quadratic-conjugated.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "biflab/sphere.hpp"

namespace biflab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BoundaryModel {
    EmptyBoundary,  // rational: W = X, nothing to truncate on
    InfinityOnly,   // entire/meromorphic: boundary of W is {inf}
};

enum class ExceptionalClass {
    Rational,
    Entire,
    MeromorphicOmittedPole,
    CstarMap,
    NonExceptional,
};

inline std::string to_string(ExceptionalClass c) {
    switch (c) {
        case ExceptionalClass::Rational: return "rational";
        case ExceptionalClass::Entire: return "entire";
        case ExceptionalClass::MeromorphicOmittedPole: return "meromorphic-omitted-pole";
        case ExceptionalClass::CstarMap: return "cstar-map";
        case ExceptionalClass::NonExceptional: return "non-exceptional";
    }
    return "?";
}

struct SingularValue {
    enum class Kind { Critical, Asymptotic };
    Kind kind = Kind::Critical;
    std::function<SpherePoint(cplx)> value;            // v(lambda)
    std::function<SpherePoint(cplx)> critical_point;   // Critical kind only
    std::string label;
    // Unit direction d(lambda) such that t*d, t -> +inf, runs into the tract
    // over an asymptotic value. Used by the virtual-cycle verifier.
    std::function<cplx(cplx)> tract_direction;
};

struct FamilyDescriptor {
    std::string id;
    std::function<SpherePoint(cplx, const SpherePoint&, double)> eval;  // (lambda, z, escape_radius)
    std::function<SpherePoint(cplx, const SpherePoint&)> deriv_z;       // finite chart
    std::vector<SingularValue> singular_values;
    BoundaryModel boundary_model = BoundaryModel::EmptyBoundary;
    bool infinity_in_domain = true;
    std::function<bool(cplx, const SpherePoint&, double)> is_pole;  // meromorphic families only
    std::function<SpherePoint(cplx, const SpherePoint&, int)> inverse_branches;
    std::pair<int, int> branch_range{0, 0};  // inclusive branch indices
    std::optional<ExceptionalClass> exceptional_class;
    // Metadata for deriving the exceptionality class of user-defined families:
    // pole count (-1 = infinitely many), and whether the single pole is omitted.
    int pole_count_hint = 0;
    bool pole_omitted = false;

    bool is_meromorphic() const {
        return boundary_model == BoundaryModel::InfinityOnly && static_cast<bool>(is_pole);
    }
    bool is_entire() const {
        return boundary_model == BoundaryModel::InfinityOnly && !static_cast<bool>(is_pole);
    }
    bool is_rational() const { return boundary_model == BoundaryModel::EmptyBoundary; }
};

// f(z) normalized onto the sphere. Meromorphic and rational families are
// clamped at the escape radius (for meromorphic maps exceeding it is the
// documented pole-hit policy; for rational maps infinity is in the domain).
// Entire maps only turn actual overflow into infinity: lambda*e^z with huge
// |z| but Re z < 0 legitimately comes back near 0.
inline SpherePoint evaluate(const FamilyDescriptor& fam, cplx lambda, const SpherePoint& z,
                            double escape_radius = 1e12) {
    if (z.is_inf() && !fam.infinity_in_domain) throw Error("outside domain");
    return fam.eval(lambda, z, escape_radius);
}

inline SpherePoint derivative_z(const FamilyDescriptor& fam, cplx lambda, const SpherePoint& z) {
    if (z.is_inf()) throw Error("derivative chart");
    return fam.deriv_z(lambda, z);
}

namespace detail {

constexpr double kOverflowGuard = 1e300;

inline double entire_radius(double) { return kOverflowGuard; }

}  // namespace detail

inline FamilyDescriptor make_quadratic() {
    FamilyDescriptor f;
    f.id = "quadratic";
    f.boundary_model = BoundaryModel::EmptyBoundary;
    f.infinity_in_domain = true;
    f.exceptional_class = ExceptionalClass::Rational;
    f.eval = [](cplx lambda, const SpherePoint& z, double R) {
        if (z.is_inf()) return SpherePoint::infinity();
        return normalize(z.value() * z.value() + lambda, R);
    };
    f.deriv_z = [](cplx, const SpherePoint& z) {
        return SpherePoint::finite(2.0 * z.value());
    };
    SingularValue sv;
    sv.kind = SingularValue::Kind::Critical;
    sv.label = "critical value lambda";
    sv.value = [](cplx lambda) { return SpherePoint::finite(lambda); };
    sv.critical_point = [](cplx) { return SpherePoint::finite(0.0); };
    f.singular_values = {sv};
    f.inverse_branches = [](cplx lambda, const SpherePoint& w, int k) {
        if (w.is_inf()) return SpherePoint::infinity();
        cplx r = std::sqrt(w.value() - lambda);
        return SpherePoint::finite(k == 0 ? r : -r);
    };
    f.branch_range = {0, 1};
    return f;
}

// A(z) = 2z + 1 conjugate of the quadratic family, for invariance tests.
inline FamilyDescriptor make_quadratic_conjugated() {
    const auto A = [](cplx z) { return 2.0 * z + 1.0; };
    const auto Ainv = [](cplx w) { return (w - 1.0) / 2.0; };
    FamilyDescriptor f;
    f.id = "quadratic-conjugated";
    f.boundary_model = BoundaryModel::EmptyBoundary;
    f.infinity_in_domain = true;
    f.exceptional_class = ExceptionalClass::Rational;
    f.eval = [=](cplx lambda, const SpherePoint& z, double R) {
        if (z.is_inf()) return SpherePoint::infinity();
        const cplx y = Ainv(z.value());
        return normalize(A(y * y + lambda), R);
    };
    f.deriv_z = [=](cplx, const SpherePoint& z) {
        // g'(w) = f'(A^-1 w) by the chain rule with A affine of slope 2
        return SpherePoint::finite(2.0 * Ainv(z.value()));
    };
    SingularValue sv;
    sv.kind = SingularValue::Kind::Critical;
    sv.label = "critical value 2*lambda+1";
    sv.value = [=](cplx lambda) { return SpherePoint::finite(A(lambda)); };
    sv.critical_point = [=](cplx) { return SpherePoint::finite(A(0.0)); };
    f.singular_values = {sv};
    f.inverse_branches = [=](cplx lambda, const SpherePoint& w, int k) {
        if (w.is_inf()) return SpherePoint::infinity();
        cplx r = std::sqrt(Ainv(w.value()) - lambda);
        return SpherePoint::finite(A(k == 0 ? r : -r));
    };
    f.branch_range = {0, 1};
    return f;
}

inline FamilyDescriptor make_exponential() {
    FamilyDescriptor f;
    f.id = "exponential";
    f.boundary_model = BoundaryModel::InfinityOnly;
    f.infinity_in_domain = false;
    f.exceptional_class = ExceptionalClass::Entire;
    f.pole_count_hint = 0;
    f.eval = [](cplx lambda, const SpherePoint& z, double) {
        return normalize(lambda * std::exp(z.value()), detail::kOverflowGuard);
    };
    f.deriv_z = [](cplx lambda, const SpherePoint& z) {
        return normalize(lambda * std::exp(z.value()), detail::kOverflowGuard);
    };
    SingularValue sv;
    sv.kind = SingularValue::Kind::Asymptotic;
    sv.label = "asymptotic value 0 (omitted)";
    sv.value = [](cplx) { return SpherePoint::finite(0.0); };
    sv.tract_direction = [](cplx) { return cplx(-1.0, 0.0); };  // Re z -> -inf
    f.singular_values = {sv};
    f.inverse_branches = [](cplx lambda, const SpherePoint& w, int k) {
        if (w.is_inf() || w.value() == 0.0) return SpherePoint::infinity();
        const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
        return SpherePoint::finite(std::log(w.value() / lambda) + double(k) * two_pi_i);
    };
    f.branch_range = {-3, 3};
    return f;
}

inline FamilyDescriptor make_tangent() {
    FamilyDescriptor f;
    f.id = "tangent";
    f.boundary_model = BoundaryModel::InfinityOnly;
    f.infinity_in_domain = false;
    f.exceptional_class = ExceptionalClass::NonExceptional;
    f.pole_count_hint = -1;  // poles at pi/2 + k*pi
    f.eval = [](cplx lambda, const SpherePoint& z, double R) {
        return normalize(lambda * std::tan(z.value()), R);
    };
    f.deriv_z = [](cplx lambda, const SpherePoint& z) {
        const cplx t = std::tan(z.value());
        return normalize(lambda * (1.0 + t * t), detail::kOverflowGuard);
    };
    f.is_pole = [](cplx, const SpherePoint& z, double tol) {
        if (z.is_inf()) return false;
        // nearest pole pi/2 + k*pi on the real axis
        const double pi = std::numbers::pi;
        const double k = std::round((z.value().real() - pi / 2.0) / pi);
        const cplx pole(pi / 2.0 + k * pi, 0.0);
        return std::abs(z.value() - pole) < tol;
    };
    SingularValue up, down;
    up.kind = SingularValue::Kind::Asymptotic;
    up.label = "asymptotic value i*lambda";
    up.value = [](cplx lambda) { return SpherePoint::finite(cplx(0.0, 1.0) * lambda); };
    up.tract_direction = [](cplx) { return cplx(0.0, 1.0); };  // Im z -> +inf
    down.kind = SingularValue::Kind::Asymptotic;
    down.label = "asymptotic value -i*lambda";
    down.value = [](cplx lambda) { return SpherePoint::finite(cplx(0.0, -1.0) * lambda); };
    down.tract_direction = [](cplx) { return cplx(0.0, -1.0); };
    f.singular_values = {up, down};
    f.inverse_branches = [](cplx lambda, const SpherePoint& w, int k) {
        if (w.is_inf()) {
            const double pi = std::numbers::pi;
            return SpherePoint::finite(cplx(pi / 2.0 + double(k) * pi, 0.0));
        }
        const cplx a = std::atan(w.value() / lambda);
        if (!is_finite_number(a)) return SpherePoint::infinity();
        return SpherePoint::finite(a + double(k) * std::numbers::pi);
    };
    f.branch_range = {-3, 3};
    return f;
}

inline FamilyDescriptor builtin(const std::string& id) {
    if (id == "quadratic") return make_quadratic();
    if (id == "exponential") return make_exponential();
    if (id == "tangent") return make_tangent();
    if (id == "quadratic-conjugated") return make_quadratic_conjugated();
    throw Error("unknown family");
}

inline const std::vector<std::string>& builtin_ids() {
    static const std::vector<std::string> ids = {"quadratic", "exponential", "tangent",
                                                 "quadratic-conjugated"};
    return ids;
}

// Stored class when present; otherwise derived from the boundary model and
// the pole metadata, following the exhaustive exceptional list.
inline ExceptionalClass classify_exceptional(const FamilyDescriptor& fam) {
    if (fam.exceptional_class) return *fam.exceptional_class;
    if (fam.boundary_model == BoundaryModel::EmptyBoundary) {
        if (fam.pole_count_hint != 0 || fam.is_pole) throw Error("unclassifiable");
        return ExceptionalClass::Rational;
    }
    // InfinityOnly
    if (fam.pole_count_hint == 0) {
        if (fam.is_pole) throw Error("unclassifiable");
        return ExceptionalClass::Entire;
    }
    if (fam.pole_count_hint == 1) {
        return fam.pole_omitted ? ExceptionalClass::MeromorphicOmittedPole
                                : ExceptionalClass::NonExceptional;
    }
    if (fam.pole_count_hint > 1 || fam.pole_count_hint == -1) return ExceptionalClass::NonExceptional;
    throw Error("unclassifiable");
}

}  // namespace biflab
