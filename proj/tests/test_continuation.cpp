#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "biflab/continuation.hpp"

using namespace biflab;
using Catch::Approx;

namespace {
const RunConfig cfg{};

cplx beta_closed_form(cplx lam) { return (1.0 + std::sqrt(cplx(1, 0) - 4.0 * lam)) / 2.0; }

CycleRecord beta_cycle_at(cplx lam) {
    const auto fam = builtin("quadratic");
    const auto c = find_cycle_newton(fam, lam, 1, SpherePoint::finite(beta_closed_form(lam)), cfg);
    REQUIRE(c);
    return *c;
}
}  // namespace

TEST_CASE("beta continues from 0 to -2 and matches the closed form") {
    const auto fam = builtin("quadratic");
    const auto trace = continue_cycle(fam, beta_cycle_at(cplx(0, 0)), {cplx(0, 0), cplx(-2, 0)});
    REQUIRE(trace.completed());
    REQUIRE(trace.tracked.size() == 1);
    for (size_t j = 0; j < trace.path.size(); ++j) {
        const cplx expect = beta_closed_form(trace.path[j]);
        REQUIRE(trace.tracked[0][j].is_finite());
        CHECK(std::abs(trace.tracked[0][j].value() - expect) < 1e-9);
    }
    const cplx end = trace.tracked[0].back().value();
    CHECK(std::abs(end - cplx(2, 0)) < 1e-9);
    // endpoint multiplier 4
    const auto endcyc = detail::build_cycle(fam, cplx(-2, 0), SpherePoint::finite(end), 1, cfg);
    CHECK(std::abs(endcyc.multiplier.value() - cplx(4, 0)) < 1e-8);
}

TEST_CASE("continuation aborts at the parabolic root lambda=1/4") {
    const auto fam = builtin("quadratic");
    const auto trace = continue_cycle(fam, beta_cycle_at(cplx(0, 0)), {cplx(0, 0), cplx(0.25, 0)});
    REQUIRE_FALSE(trace.completed());
    CHECK(trace.reason == AbortReason::MultiplierCrossed);
    CHECK(std::abs(trace.at_lambda - cplx(0.25, 0)) < 1e-3);
}

TEST_CASE("persistently fixed tangent point continues trivially") {
    const auto fam = builtin("tangent");
    const auto c = find_cycle_newton(fam, cplx(2, 0), 1, SpherePoint::finite(0.05), cfg);
    REQUIRE(c);
    REQUIRE(std::abs(c->points[0].value()) < 1e-12);
    const auto trace = continue_cycle(fam, *c, {cplx(2, 0), cplx(2, 1)});
    REQUIRE(trace.completed());
    for (const auto& p : trace.tracked[0]) {
        REQUIRE(p.is_finite());
        CHECK(std::abs(p.value()) < 1e-10);
    }
}

TEST_CASE("path reversal returns to the initial cycle") {
    const auto fam = builtin("quadratic");
    const auto start = beta_cycle_at(cplx(0, 0));
    const std::vector<cplx> path{cplx(0, 0), cplx(-0.8, 0.5), cplx(-1.6, 0.2)};
    const auto fwd = continue_cycle(fam, start, path);
    REQUIRE(fwd.completed());
    const auto endcyc = detail::build_cycle(fam, path.back(), fwd.tracked[0].back(), 1, cfg);
    const std::vector<cplx> rev{path[2], path[1], path[0]};
    const auto back = continue_cycle(fam, endcyc, rev);
    REQUIRE(back.completed());
    CHECK(chordal_distance(back.tracked[0].back(), start.points[0]) < 1e-8);
}

TEST_CASE("period preserved along completed traces") {
    const auto fam = builtin("quadratic");
    // repelling 2-cycle at lambda=-1.35 continued within the antenna region
    const auto c2 = find_cycle_newton(fam, cplx(0.3, 0.0), 2, SpherePoint::finite(-0.5, 0.8), cfg);
    REQUIRE(c2);
    REQUIRE(c2->period == 2);
    REQUIRE(c2->stability == Stability::Repelling);
    const auto trace = continue_cycle(fam, *c2, {cplx(0.3, 0.0), cplx(0.3, 0.4)});
    REQUIRE(trace.completed());
    for (size_t j = 0; j < trace.path.size(); ++j) {
        const auto cyc = detail::build_cycle(fam, trace.path[j], trace.tracked[0][j], 2, cfg);
        CHECK(detail::minimal_period(fam, trace.path[j], trace.tracked[0][j].value(), 2, cfg) == 2);
        CHECK(cyc.stability == Stability::Repelling);
    }
}

TEST_CASE("backward orbit of beta at lambda=0") {
    const auto fam = builtin("quadratic");
    SECTION("depth 1, constant path: {1, -1} stationary") {
        const auto trace = continue_backward_orbit(fam, cplx(0, 0), SpherePoint::finite(1.0), 1,
                                                   {cplx(0, 0), cplx(0, 0)});
        REQUIRE(trace.completed());
        REQUIRE(trace.tracked.size() == 2);
        for (const auto& track : trace.tracked)
            for (const auto& p : track) {
                REQUIRE(p.is_finite());
                CHECK(std::abs(std::abs(p.value()) - 1.0) < 1e-10);
            }
        // both points present
        const cplx a = trace.tracked[0][0].value(), b = trace.tracked[1][0].value();
        CHECK(std::abs(a - b) > 1.0);
    }
    SECTION("depth 2 along 0 -> 0.1: endpoints satisfy f^2(z) = beta(0.1)") {
        const auto trace = continue_backward_orbit(fam, cplx(0, 0), SpherePoint::finite(1.0), 2,
                                                   {cplx(0, 0), cplx(0.1, 0)});
        REQUIRE(trace.completed());
        REQUIRE(trace.tracked.size() == 4);  // {1, -1, i, -i} at the basepoint
        const cplx beta = beta_closed_form(cplx(0.1, 0));
        for (const auto& track : trace.tracked) {
            SpherePoint w = track.back();
            for (int k = 0; k < 2; ++k) w = detail::orbit_step(fam, cplx(0.1, 0), w, cfg);
            CHECK(chordal_distance(w, SpherePoint::finite(beta)) < 1e-9);
        }
    }
    SECTION("dynamics preservation: children map onto parents at every sample") {
        const auto trace = continue_backward_orbit(fam, cplx(0, 0), SpherePoint::finite(1.0), 2,
                                                   {cplx(0, 0), cplx(0.1, 0)});
        REQUIRE(trace.completed());
        for (size_t i = 0; i < trace.tracked.size(); ++i) {
            const int parent = trace.parents[i];
            if (parent < 0) continue;
            for (size_t j = 0; j < trace.path.size(); ++j) {
                const auto img = evaluate(fam, trace.path[j], trace.tracked[i][j]);
                CHECK(chordal_distance(img, trace.tracked[static_cast<size_t>(parent)][j]) < 1e-9);
            }
        }
    }
}

TEST_CASE("tangent preimages of 0 move continuously") {
    const auto fam = builtin("tangent");
    const auto trace = continue_backward_orbit(fam, cplx(2, 0), SpherePoint::finite(0.0), 1,
                                               {cplx(2, 0), cplx(2.2, 0)});
    REQUIRE(trace.completed());
    REQUIRE(trace.tracked.size() >= 5);  // 0 and +-pi, +-2pi, ...
    for (size_t i = 0; i < trace.tracked.size(); ++i) {
        for (size_t j = 0; j < trace.path.size(); ++j) {
            const auto img = evaluate(fam, trace.path[j], trace.tracked[i][j]);
            const int parent = trace.parents[i];
            const auto target = parent < 0 ? trace.tracked[i][j]  // base is fixed
                                           : trace.tracked[static_cast<size_t>(parent)][j];
            CHECK(chordal_distance(img, target) < 1e-9);
        }
    }
}

TEST_CASE("stability probe") {
    SECTION("quadratic: stable at the cardioid center") {
        const auto r = stability_probe(builtin("quadratic"), cplx(0, 0), 0.05, cfg);
        CHECK(r.stable);
    }
    SECTION("quadratic: unstable at the cardioid root") {
        const auto r = stability_probe(builtin("quadratic"), cplx(0.25, 0), 0.05, cfg);
        REQUIRE_FALSE(r.stable);
        const bool witnessed = r.witness.kind == "activity" ||
                               (r.witness.trace_reason &&
                                *r.witness.trace_reason == AbortReason::MultiplierCrossed);
        CHECK(witnessed);
    }
    SECTION("tangent: stable at lambda=0.5") {
        const auto r = stability_probe(builtin("tangent"), cplx(0.5, 0), 0.05, cfg);
        CHECK(r.stable);
    }
}

TEST_CASE("continuation input validation") {
    const auto fam = builtin("quadratic");
    // alpha fixed point at lambda=0 is attracting; refuse to continue it
    const auto alpha = find_cycle_newton(fam, cplx(0, 0), 1, SpherePoint::finite(0.01), cfg);
    REQUIRE(alpha);
    REQUIRE(alpha->stability == Stability::Attracting);
    CHECK_THROWS_WITH(continue_cycle(fam, *alpha, {cplx(0, 0), cplx(0.1, 0)}),
                      "cycle not repelling");
}

TEST_CASE("motion trace serializes") {
    const auto fam = builtin("quadratic");
    const auto trace = continue_cycle(fam, beta_cycle_at(cplx(0, 0)), {cplx(0, 0), cplx(-0.5, 0)});
    REQUIRE(trace.completed());
    const nlohmann::json j = trace;
    CHECK(j.at("status") == "completed");
    CHECK(j.at("tracked").size() == 1);
    CHECK(j.at("tracked")[0].size() == j.at("path").size());
}
