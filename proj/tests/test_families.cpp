#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "biflab/families.hpp"

using namespace biflab;
using Catch::Approx;

static cplx rand_cplx(std::mt19937_64& rng, double box) {
    std::uniform_real_distribution<double> u(-box, box);
    return cplx(u(rng), u(rng));
}

TEST_CASE("builtin ids and contents") {
    const auto quad = builtin("quadratic");
    REQUIRE(quad.singular_values.size() == 1);
    CHECK(quad.singular_values[0].kind == SingularValue::Kind::Critical);
    CHECK(quad.singular_values[0].value(cplx(0.3, -0.1)).value() == cplx(0.3, -0.1));
    CHECK(quad.singular_values[0].critical_point(cplx(0.3, -0.1)).value() == cplx(0.0, 0.0));

    const auto tan = builtin("tangent");
    REQUIRE(tan.singular_values.size() == 2);
    const cplx lam(0.4, 1.1);
    CHECK(tan.singular_values[0].value(lam).value() == cplx(0.0, 1.0) * lam);
    CHECK(tan.singular_values[1].value(lam).value() == cplx(0.0, -1.0) * lam);

    const auto exp = builtin("exponential");
    CHECK(classify_exceptional(exp) == ExceptionalClass::Entire);

    CHECK_THROWS_WITH(builtin("cubic"), "unknown family");
}

TEST_CASE("exceptional classification of built-ins") {
    CHECK(classify_exceptional(builtin("quadratic")) == ExceptionalClass::Rational);
    CHECK(classify_exceptional(builtin("quadratic-conjugated")) == ExceptionalClass::Rational);
    CHECK(classify_exceptional(builtin("exponential")) == ExceptionalClass::Entire);
    CHECK(classify_exceptional(builtin("tangent")) == ExceptionalClass::NonExceptional);
}

TEST_CASE("derived classification for user families") {
    FamilyDescriptor f = builtin("tangent");
    f.exceptional_class.reset();
    CHECK(classify_exceptional(f) == ExceptionalClass::NonExceptional);

    FamilyDescriptor g = builtin("exponential");
    g.exceptional_class.reset();
    CHECK(classify_exceptional(g) == ExceptionalClass::Entire);

    FamilyDescriptor one_pole = builtin("tangent");
    one_pole.exceptional_class.reset();
    one_pole.pole_count_hint = 1;
    one_pole.pole_omitted = true;
    CHECK(classify_exceptional(one_pole) == ExceptionalClass::MeromorphicOmittedPole);
    one_pole.pole_omitted = false;
    CHECK(classify_exceptional(one_pole) == ExceptionalClass::NonExceptional);

    // inconsistent metadata: rational boundary model with a pole set
    FamilyDescriptor bad = builtin("quadratic");
    bad.exceptional_class.reset();
    bad.pole_count_hint = 3;
    CHECK_THROWS_WITH(classify_exceptional(bad), "unclassifiable");
}

TEST_CASE("evaluate examples") {
    const auto quad = builtin("quadratic");
    CHECK(evaluate(quad, cplx(0, 1), SpherePoint::finite(0.0)).value() == cplx(0, 1));

    const auto tan = builtin("tangent");
    const double pi = std::numbers::pi;
    const auto v = evaluate(tan, cplx(1, 0), SpherePoint::finite(pi / 4.0));
    REQUIRE(v.is_finite());
    CHECK(v.value().real() == Approx(1.0).margin(1e-12));
    CHECK(evaluate(tan, cplx(1, 0), SpherePoint::finite(pi / 2.0)).is_inf());

    // infinity handling per domain
    CHECK(evaluate(quad, cplx(0, 0), SpherePoint::infinity()).is_inf());
    CHECK_THROWS_WITH(evaluate(builtin("exponential"), cplx(1, 0), SpherePoint::infinity()),
                      "outside domain");
}

TEST_CASE("derivative examples") {
    CHECK(derivative_z(builtin("quadratic"), cplx(0.7, 0.7), SpherePoint::finite(1.0)).value() ==
          cplx(2.0, 0.0));
    const auto d = derivative_z(builtin("exponential"), cplx(2, 0), SpherePoint::finite(0.0));
    CHECK(d.value() == cplx(2.0, 0.0));
    const auto dt = derivative_z(builtin("tangent"), cplx(3, 0), SpherePoint::finite(0.0));
    CHECK(dt.value().real() == Approx(3.0).margin(1e-12));
    CHECK_THROWS_WITH(derivative_z(builtin("quadratic"), cplx(0, 0), SpherePoint::infinity()),
                      "derivative chart");
}

TEST_CASE("finite differences match analytic derivative") {
    std::mt19937_64 rng(11);
    for (const auto& id : builtin_ids()) {
        const auto fam = builtin(id);
        int checked = 0;
        while (checked < 100) {
            const cplx lam = rand_cplx(rng, 1.5);
            const cplx z = rand_cplx(rng, 1.2);
            const double h = 1e-6;
            const auto fp = evaluate(fam, lam, SpherePoint::finite(z + h));
            const auto fm = evaluate(fam, lam, SpherePoint::finite(z - h));
            const auto fd = derivative_z(fam, lam, SpherePoint::finite(z));
            if (fp.is_inf() || fm.is_inf() || fd.is_inf()) continue;  // near a pole
            const cplx approx = (fp.value() - fm.value()) / (2.0 * h);
            if (std::abs(fd.value()) > 1e3) continue;
            CHECK(std::abs(approx - fd.value()) < 1e-5);
            ++checked;
        }
    }
}

TEST_CASE("holomorphy: Cauchy-Riemann residual of finite differences") {
    std::mt19937_64 rng(13);
    for (const auto& id : builtin_ids()) {
        const auto fam = builtin(id);
        int checked = 0;
        while (checked < 50) {
            const cplx lam = rand_cplx(rng, 1.0);
            const cplx z = rand_cplx(rng, 1.0);
            const double h = 1e-6;
            auto at = [&](cplx w) { return evaluate(fam, lam, SpherePoint::finite(w)); };
            const auto fr1 = at(z + h), fr2 = at(z - h);
            const auto fi1 = at(z + cplx(0, h)), fi2 = at(z - cplx(0, h));
            if (fr1.is_inf() || fr2.is_inf() || fi1.is_inf() || fi2.is_inf()) continue;
            const cplx dx = (fr1.value() - fr2.value()) / (2.0 * h);
            const cplx dy = (fi1.value() - fi2.value()) / (cplx(0, 2.0 * h));
            if (std::abs(dx) > 1e3) continue;
            CHECK(std::abs(dx - dy) < 1e-6 * std::max(1.0, std::abs(dx)));
            // same in the parameter variable
            auto at_lam = [&](cplx l) { return evaluate(fam, l, SpherePoint::finite(z)); };
            const auto gr1 = at_lam(lam + h), gr2 = at_lam(lam - h);
            const auto gi1 = at_lam(lam + cplx(0, h)), gi2 = at_lam(lam - cplx(0, h));
            if (gr1.is_inf() || gr2.is_inf() || gi1.is_inf() || gi2.is_inf()) continue;
            const cplx gx = (gr1.value() - gr2.value()) / (2.0 * h);
            const cplx gy = (gi1.value() - gi2.value()) / (cplx(0, 2.0 * h));
            if (std::abs(gx) > 1e3) continue;
            CHECK(std::abs(gx - gy) < 1e-6 * std::max(1.0, std::abs(gx)));
            ++checked;
        }
    }
}

TEST_CASE("critical point consistency") {
    std::mt19937_64 rng(17);
    for (const auto& id : builtin_ids()) {
        const auto fam = builtin(id);
        for (const auto& sv : fam.singular_values) {
            if (sv.kind != SingularValue::Kind::Critical) continue;
            for (int i = 0; i < 100; ++i) {
                const cplx lam = rand_cplx(rng, 2.0);
                const auto cp = sv.critical_point(lam);
                const auto img = evaluate(fam, lam, cp);
                CHECK(chordal_distance(img, sv.value(lam)) < 1e-9);
                const auto d = derivative_z(fam, lam, cp);
                REQUIRE(d.is_finite());
                CHECK(std::abs(d.value()) < 1e-9);
            }
        }
    }
}

TEST_CASE("inverse branches invert evaluate") {
    std::mt19937_64 rng(23);
    for (const auto& id : builtin_ids()) {
        const auto fam = builtin(id);
        REQUIRE(fam.inverse_branches);
        int checked = 0;
        while (checked < 60) {
            const cplx lam = rand_cplx(rng, 1.0) + cplx(0.5, 0.0);  // keep away from lambda=0
            const cplx w = rand_cplx(rng, 2.0);
            for (int k = fam.branch_range.first; k <= fam.branch_range.second; ++k) {
                const auto pre = fam.inverse_branches(lam, SpherePoint::finite(w), k);
                if (pre.is_inf()) continue;
                const auto img = evaluate(fam, lam, pre);
                CHECK(chordal_distance(img, SpherePoint::finite(w)) < 1e-9);
            }
            ++checked;
        }
    }
}
