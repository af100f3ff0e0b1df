// Built-in verification suite: end-to-end checks of the engine against
// closed forms and independently re-evaluated relations, at desk scale.
// Run through the `verify` CLI subcommand or the acceptance test binary.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "biflab/continuation.hpp"
#include "biflab/scan.hpp"
#include "biflab/shooting.hpp"

namespace biflab {

struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string detail;  // first failing sub-check, or summary stats
    double seconds = 0.0;
};

namespace selftest {

struct Checker {
    bool ok = true;
    std::string first_failure;
    int checks = 0;

    void expect(bool cond, const std::string& what) {
        ++checks;
        if (!cond && ok) {
            ok = false;
            first_failure = what;
        }
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline GridSpec quadratic_window(ScanTask task, int n = 64) {
    GridSpec spec;
    spec.center = cplx(-0.5, 0.0);  // [-2.5, 1.5] x [-2, 2]
    spec.width = 4.0;
    spec.height = 4.0;
    spec.nx = n;
    spec.ny = n;
    spec.task = task;
    return spec;
}

inline const GridCell& cell_at(const GridResult& r, cplx lambda) {
    const auto& s = r.spec;
    const int col =
        static_cast<int>((lambda.real() - (s.center.real() - s.width / 2)) / s.width * s.nx);
    const int row =
        static_cast<int>((lambda.imag() - (s.center.imag() - s.height / 2)) / s.height * s.ny);
    return r.cells[static_cast<size_t>(row) * s.nx + col];
}

inline void quadratic_sanity(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("quadratic");
    const auto map = scan_grid(fam, 0, quadratic_window(ScanTask::PeriodMap));
    c.expect(cell_at(map, cplx(0, 0)).code == 1, "cell at 0 has period 1");
    c.expect(cell_at(map, cplx(-1, 0)).code == 2, "cell at -1 has period 2");

    // superattracting multipliers at the exact centers
    for (const cplx lam : {cplx(0, 0), cplx(-1, 0)}) {
        const auto rec = iterate_orbit(fam, lam, SpherePoint::finite(lam), cfg);
        c.expect(rec.fate.kind == FateKind::Captured, "orbit captured at center");
        if (rec.fate.cycle) {
            c.expect(rec.fate.cycle->multiplier.is_finite() &&
                         std::abs(rec.fate.cycle->multiplier.value()) < 1e-9,
                     "superattracting multiplier below 1e-9");
        }
    }

    // period-2 multiplier closed form 4(lambda+1) at lambda = -1.1
    const auto rec = iterate_orbit(fam, cplx(-1.1, 0), SpherePoint::finite(-1.1), cfg);
    c.expect(rec.fate.kind == FateKind::Captured && rec.fate.cycle->period == 2,
             "period-2 capture at -1.1");
    if (rec.fate.cycle)
        c.expect(std::abs(rec.fate.cycle->multiplier.value() - cplx(-0.4, 0)) < 1e-9,
                 "multiplier -0.4 within 1e-9");
}

inline void misiurewicz_shooting(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("quadratic");
    const cplx lambda0(0.2, 0.95);
    const cplx seed_pt = (-1.0 + std::sqrt(cplx(-3, 0) - 4.0 * lambda0)) / 2.0;
    const auto target = find_cycle_newton(fam, lambda0, 2, SpherePoint::finite(seed_pt), cfg);
    c.expect(target.has_value() && target->stability == Stability::Repelling,
             "repelling 2-cycle at the seed parameter");
    if (!target) return;
    const auto found = find_misiurewicz(fam, 0, lambda0, 3, *target, 0.3, cfg);
    bool has_i = false;
    for (const cplx lam : found) has_i = has_i || std::abs(lam - cplx(0, 1)) < 1e-8;
    c.expect(has_i, "recovers lambda = i within 1e-8");
    const auto verdict = classify(fam, 0, cplx(0, 1), 0.02, cfg);
    c.expect(verdict.kind == ActivityVerdict::Kind::Active, "classify Active at lambda = i");
}

inline void virtual_cycle(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("tangent");
    const cplx lambda_vc(0.0, -std::numbers::pi / 2.0);
    const auto recs = find_truncation_parameters(fam, 0, cplx(0, -1.5), {1}, 0.5, cfg);
    c.expect(recs.size() == 1, "one truncation parameter in the disk");
    if (recs.empty()) return;
    c.expect(std::abs(recs[0].lambda_vc - lambda_vc) < 1e-9, "lambda_vc = -i pi/2");
    // residual of the defining relation under re-evaluation
    SpherePoint w = fam.singular_values[0].value(recs[0].lambda_vc);
    w = detail::orbit_step(fam, recs[0].lambda_vc, w, cfg);
    c.expect(chordal_distance(w, SpherePoint::infinity()) < 1e-10, "pole residual below 1e-10");

    const auto entries = verify_attracting_near_virtual(fam, recs[0], 4, cfg);
    c.expect(entries.size() >= 3, "at least 3 confirming parameters");
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
        c.expect(e.period == 2, "attracting period exactly 2");
        const double m = std::abs(e.multiplier.value());
        c.expect(m < prev, "strictly decreasing multiplier moduli");
        prev = m;
        const auto orbit = iterate_orbit(fam, e.lambda, fam.singular_values[0].value(e.lambda), cfg);
        c.expect(orbit.fate.kind == FateKind::Captured && orbit.fate.cycle->period == 2,
                 "asymptotic value captured by the period-2 cycle");
    }
    if (entries.size() >= 2) {
        c.expect(std::abs(entries.back().multiplier.value()) <
                     std::abs(entries.front().multiplier.value()) / 10.0,
                 "last multiplier an order below the first");
    }
}

inline void holomorphic_motion(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("quadratic");
    const auto beta = [](cplx lam) { return (1.0 + std::sqrt(cplx(1, 0) - 4.0 * lam)) / 2.0; };
    const auto cycle0 = find_cycle_newton(fam, cplx(0, 0), 1, SpherePoint::finite(1.0), cfg);
    c.expect(cycle0.has_value(), "beta located at lambda=0");
    if (!cycle0) return;

    const auto fwd = continue_cycle(fam, *cycle0, {cplx(0, 0), cplx(-2, 0)});
    c.expect(fwd.completed(), "trace 0 -> -2 completes");
    bool closed_form = fwd.completed();
    for (size_t j = 0; j < fwd.path.size() && closed_form; ++j)
        closed_form = fwd.tracked[0][j].is_finite() &&
                      std::abs(fwd.tracked[0][j].value() - beta(fwd.path[j])) < 1e-9;
    c.expect(closed_form, "matches (1+sqrt(1-4l))/2 within 1e-9 at every sample");

    const auto parab = continue_cycle(fam, *cycle0, {cplx(0, 0), cplx(0.25, 0)});
    c.expect(!parab.completed() && parab.reason == AbortReason::MultiplierCrossed,
             "0 -> 0.25 aborts with MultiplierCrossed");
    if (!parab.completed())
        c.expect(std::abs(parab.at_lambda - cplx(0.25, 0)) < 1e-3, "abort within 1e-3 of 1/4");

    if (fwd.completed()) {
        const auto endcyc =
            detail::build_cycle(fam, cplx(-2, 0), fwd.tracked[0].back(), 1, cfg);
        const auto back = continue_cycle(fam, endcyc, {cplx(-2, 0), cplx(0, 0)});
        c.expect(back.completed() &&
                     chordal_distance(back.tracked[0].back(), cycle0->points[0]) < 1e-8,
                 "path reversal returns within 1e-8");
    }
}

inline void stability_dichotomy(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("quadratic");
    c.expect(stability_probe(fam, cplx(0, 0), 0.05, cfg).stable, "stable at lambda=0");
    c.expect(!stability_probe(fam, cplx(0.25, 0), 0.05, cfg).stable, "unstable at lambda=1/4");

    GridSpec b0;
    b0.center = cplx(0, 0);
    b0.width = b0.height = 0.4;
    b0.nx = b0.ny = 32;
    b0.task = ScanTask::PeriodMap;
    const auto rep0 = period_bound_report(fam, 0, b0);
    c.expect(rep0.max_period == 1 && rep0.undecided == 0, "max period 1 on B(0, 0.2)");

    GridSpec b1 = b0;
    b1.center = cplx(-1, 0);
    b1.width = b1.height = 0.2;
    const auto rep1 = period_bound_report(fam, 0, b1);
    c.expect(rep1.max_period == 2, "max period 2 on B(-1, 0.1)");

    // 3x3 period coherence on the full window
    const auto map = scan_grid(fam, 0, quadratic_window(ScanTask::PeriodMap));
    const auto& s = map.spec;
    int blocks = 0, violations = 0;
    for (int row = 1; row + 1 < s.ny; ++row) {
        for (int col = 1; col + 1 < s.nx; ++col) {
            const int p = map.cells[static_cast<size_t>(row) * s.nx + col].code;
            if (p <= 0) continue;
            bool uniform = true;
            for (int dr = -1; dr <= 1 && uniform; ++dr)
                for (int dc = -1; dc <= 1 && uniform; ++dc)
                    uniform =
                        map.cells[static_cast<size_t>(row + dr) * s.nx + (col + dc)].code == p;
            if (!uniform) continue;
            ++blocks;
            if (activity_indicator(fam, 0, s.cell_lambda(row, col), s.config) != 0.0) ++violations;
        }
    }
    c.expect(blocks > 100, "enough uniform 3x3 blocks to test");
    c.expect(violations == 0, "zero coherence violations among decided blocks");
}

inline void tangent_passivity(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("tangent");
    for (int sv = 0; sv < 2; ++sv) {
        const auto v = classify(fam, sv, cplx(0.5, 0), 0.05, cfg);
        c.expect(v.kind == ActivityVerdict::Kind::Passive &&
                     v.reason == PassiveReason::AttractingCapture,
                 "Passive{AttractingCapture} at lambda=0.5");
    }
    const auto rec = iterate_orbit(fam, cplx(0.5, 0), fam.singular_values[0].value(cplx(0.5, 0)), cfg);
    c.expect(rec.fate.kind == FateKind::Captured && rec.fate.cycle->period == 1 &&
                 std::abs(rec.fate.cycle->multiplier.value() - cplx(0.5, 0)) < 1e-9,
             "fixed point 0 with multiplier 0.5");

    const auto v = classify(fam, 0, cplx(0, -std::numbers::pi / 2.0), 0.02, cfg);
    c.expect(v.kind == ActivityVerdict::Kind::Active &&
                 v.evidence == ActiveEvidence::NonPersistentTruncation,
             "Active (non-persistent truncation) at the virtual cycle");
}

inline void invariance_determinism(Checker& c) {
    const RunConfig cfg;
    const auto quad = builtin("quadratic");
    const auto conj = builtin("quadratic-conjugated");
    int decided = 0, agree = 0;
    for (int iy = 0; iy < 16; ++iy) {
        for (int ix = 0; ix < 16; ++ix) {
            const cplx lam(-2.5 + (ix + 0.5) * 4.0 / 16.0, -2.0 + (iy + 0.5) * 4.0 / 16.0);
            const auto a = classify(quad, 0, lam, 0.02, cfg);
            const auto b = classify(conj, 0, lam, 0.02, cfg);
            if (a.decided() && b.decided()) {
                ++decided;
                agree += a.kind == b.kind;
            }
        }
    }
    c.expect(decided > 200, "most cells decided");
    c.expect(agree == decided, "100% verdict-kind agreement among decided cells");

    auto spec = quadratic_window(ScanTask::PeriodMap);
    spec.config.threads = 8;
    const auto r1 = scan_grid(quad, 0, spec);
    const auto r2 = scan_grid(quad, 0, spec);
    auto serial = spec;
    serial.config.threads = 1;
    const auto r3 = scan_grid(quad, 0, serial);
    c.expect(r1.cells == r2.cells, "repeated scans identical");
    c.expect(r1.cells == r3.cells, "parallel equals serial cell-for-cell");

    const auto tmp = std::filesystem::temp_directory_path();
    const auto p1 = (tmp / "biflab_verify_a.ppm").string();
    const auto p2 = (tmp / "biflab_verify_b.ppm").string();
    render(r1, "period", p1);
    render(r2, "period", p2);
    c.expect(read_file(p1) == read_file(p2), "byte-identical pixmaps");
    const auto j1 = (tmp / "biflab_verify_a.json").string();
    const auto j2 = (tmp / "biflab_verify_b.json").string();
    export_grid(r1, "json", j1);
    export_grid(r2, "json", j2);
    c.expect(read_file(j1) == read_file(j2), "byte-identical JSON exports");
}

inline void backward_orbit(Checker& c) {
    const RunConfig cfg;
    const auto fam = builtin("quadratic");
    const auto circle = backward_sample(fam, cplx(0, 0), SpherePoint::finite(1.0), 1000, 0);
    bool on_circle = circle.size() == 1000;
    for (const auto& s : circle)
        on_circle = on_circle && s.is_finite() && std::abs(std::abs(s.value()) - 1.0) < 1e-9;
    c.expect(on_circle, "1000 samples on the unit circle within 1e-9");

    const auto interval = backward_sample(fam, cplx(-2, 0), SpherePoint::finite(2.0), 1000, 0);
    bool on_interval = interval.size() == 1000;
    for (const auto& s : interval)
        on_interval = on_interval && s.is_finite() && std::abs(s.value().imag()) < 1e-6 &&
                      s.value().real() > -2.0 - 1e-6 && s.value().real() < 2.0 + 1e-6;
    c.expect(on_interval, "1000 samples within 1e-6 of [-2, 2]");

    const auto trace = continue_backward_orbit(fam, cplx(0, 0), SpherePoint::finite(1.0), 2,
                                               {cplx(0, 0), cplx(0.1, 0)});
    c.expect(trace.completed(), "backward-orbit trace completes");
    bool dynamics = trace.completed();
    for (size_t i = 0; i < trace.tracked.size() && dynamics; ++i) {
        const int parent = trace.parents[i];
        if (parent < 0) continue;
        for (size_t j = 0; j < trace.path.size() && dynamics; ++j) {
            const auto img = evaluate(fam, trace.path[j], trace.tracked[i][j]);
            dynamics = chordal_distance(img, trace.tracked[static_cast<size_t>(parent)][j]) < 1e-9;
        }
    }
    c.expect(dynamics, "children map onto parents within 1e-9 at every sample");
}

}  // namespace selftest

inline std::vector<CriterionResult> run_verification(const std::string& filter = "") {
    using Fn = void (*)(selftest::Checker&);
    const std::pair<const char*, Fn> criteria[] = {
        {"quadratic-sanity", selftest::quadratic_sanity},
        {"misiurewicz-shooting", selftest::misiurewicz_shooting},
        {"virtual-cycle", selftest::virtual_cycle},
        {"holomorphic-motion", selftest::holomorphic_motion},
        {"stability-dichotomy", selftest::stability_dichotomy},
        {"tangent-passivity", selftest::tangent_passivity},
        {"invariance-determinism", selftest::invariance_determinism},
        {"backward-orbit", selftest::backward_orbit},
    };
    std::vector<CriterionResult> out;
    for (const auto& [name, fn] : criteria) {
        if (!filter.empty() && std::string(name).find(filter) == std::string::npos) continue;
        CriterionResult res;
        res.name = name;
        selftest::Checker c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(c);
            res.passed = c.ok;
            res.detail = c.ok ? std::to_string(c.checks) + " checks" : c.first_failure;
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = std::string("exception: ") + e.what();
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(res));
    }
    return out;
}

// One pass/fail line per criterion. Honors NO_COLOR.
inline bool print_verification(const std::vector<CriterionResult>& results, std::ostream& os) {
    const bool color = std::getenv("NO_COLOR") == nullptr;
    bool all = true;
    for (const auto& r : results) {
        const char* tag = r.passed ? (color ? "\x1b[32mPASS\x1b[0m" : "PASS")
                                   : (color ? "\x1b[31mFAIL\x1b[0m" : "FAIL");
        char line[256];
        std::snprintf(line, sizeof line, "%s  %-24s %7.2fs  %s\n", tag, r.name.c_str(), r.seconds,
                      r.detail.c_str());
        os << line;
        all = all && r.passed;
    }
    return all;
}

}  // namespace biflab
