// Forward iteration of singular values with fate classification, cycle
// detection with Newton refinement, direct cycle search, and random inverse
// iteration for Julia-set sampling.

#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "biflab/config.hpp"
#include "biflab/families.hpp"
#include "biflab/sphere.hpp"

namespace biflab {

enum class Stability { Attracting, Repelling, Indifferent };

inline std::string to_string(Stability s) {
    switch (s) {
        case Stability::Attracting: return "attracting";
        case Stability::Repelling: return "repelling";
        case Stability::Indifferent: return "indifferent";
    }
    return "?";
}

struct CycleRecord {
    int period = 1;
    std::vector<SpherePoint> points;   // length == period
    SpherePoint multiplier;            // Infinity allowed (derivative pole on the cycle)
    Stability stability = Stability::Indifferent;

    bool contains_infinity() const {
        for (const auto& p : points)
            if (p.is_inf()) return true;
        return false;
    }
};

enum class FateKind { Truncated, Captured, Escaping, Undecided };

inline std::string to_string(FateKind k) {
    switch (k) {
        case FateKind::Truncated: return "truncated";
        case FateKind::Captured: return "captured";
        case FateKind::Escaping: return "escaping";
        case FateKind::Undecided: return "undecided";
    }
    return "?";
}

struct OrbitFate {
    FateKind kind = FateKind::Undecided;
    // Truncated: step whose iterate sits on the boundary. Captured: entry
    // step. Escaping: first exit step. Undecided: max_iter used.
    int step = 0;
    std::optional<CycleRecord> cycle;  // Captured only
};

struct OrbitRecord {
    cplx lambda;
    SpherePoint start;
    std::vector<SpherePoint> points;  // points[0] == start, points[k+1] = f(points[k])
    OrbitFate fate;
};

namespace detail {

constexpr int kMaxPeriod = 64;       // cycle search bound
constexpr int kMaxNewton = 100;
constexpr double kRefineTol = 1e-12;

// One dynamical step with the per-class boundary policy.
inline SpherePoint orbit_step(const FamilyDescriptor& fam, cplx lambda, const SpherePoint& z,
                              const RunConfig& cfg) {
    if (z.is_inf()) {
        if (!fam.infinity_in_domain) return SpherePoint::infinity();
        return evaluate(fam, lambda, z, cfg.escape_radius);
    }
    if (fam.is_meromorphic() && fam.is_pole && fam.is_pole(lambda, z, cfg.pole_tol))
        return SpherePoint::infinity();
    return evaluate(fam, lambda, z, cfg.escape_radius);
}

// f^p(z) together with the derivative product along the way (finite chart).
// ok=false when the orbit leaves the finite chart or hits a derivative pole.
struct IterateResult {
    cplx value{};
    cplx deriv{};
    bool ok = false;
};

inline IterateResult iterate_with_derivative(const FamilyDescriptor& fam, cplx lambda, cplx z,
                                             int p, const RunConfig& cfg) {
    IterateResult r;
    cplx w = z;
    cplx D = 1.0;
    for (int k = 0; k < p; ++k) {
        const SpherePoint d = fam.deriv_z(lambda, SpherePoint::finite(w));
        if (d.is_inf()) return r;
        D *= d.value();
        const SpherePoint next = orbit_step(fam, lambda, SpherePoint::finite(w), cfg);
        if (next.is_inf()) return r;
        w = next.value();
    }
    if (!is_finite_number(w) || !is_finite_number(D)) return r;
    r.value = w;
    r.deriv = D;
    r.ok = true;
    return r;
}

// Multiplier of a fixed point at infinity in the 1/z chart, by central
// finite difference of w -> 1/f(1/w) at 0.
inline SpherePoint multiplier_at_infinity(const FamilyDescriptor& fam, cplx lambda) {
    const double h = 1e-4;
    auto chart = [&](cplx w) -> cplx {
        const SpherePoint img = fam.eval(lambda, SpherePoint::finite(1.0 / w), kOverflowGuard);
        if (img.is_inf()) return cplx(0.0, 0.0);
        if (img.value() == cplx(0.0, 0.0)) return cplx(1e300, 0.0);
        return 1.0 / img.value();
    };
    const cplx m = (chart(cplx(h, 0)) - chart(cplx(-h, 0))) / cplx(2 * h, 0);
    return normalize(m, kOverflowGuard);
}

inline Stability classify_stability(const SpherePoint& multiplier, double margin) {
    if (multiplier.is_inf()) return Stability::Repelling;
    const double m = std::abs(multiplier.value());
    if (m < 1.0 - margin) return Stability::Attracting;
    if (m > 1.0 + margin) return Stability::Repelling;
    return Stability::Indifferent;
}

inline SpherePoint cycle_multiplier(const FamilyDescriptor& fam, cplx lambda,
                                    const std::vector<SpherePoint>& points, const RunConfig& cfg) {
    bool has_inf = false;
    for (const auto& p : points) has_inf = has_inf || p.is_inf();
    if (!has_inf) {
        cplx m = 1.0;
        for (const auto& p : points) {
            const SpherePoint d = fam.deriv_z(lambda, p);
            if (d.is_inf()) return SpherePoint::infinity();
            m *= d.value();
        }
        return normalize(m, kOverflowGuard);
    }
    if (points.size() == 1) return multiplier_at_infinity(fam, lambda);
    // Cycle passing through infinity: finite-difference the return map at a
    // finite cycle point. No built-in family reaches this path.
    for (size_t i = 0; i < points.size(); ++i) {
        if (points[i].is_inf()) continue;
        const cplx z0 = points[i].value();
        const double h = 1e-7 * std::max(1.0, std::abs(z0));
        auto ret = [&](cplx z) {
            SpherePoint w = SpherePoint::finite(z);
            for (size_t k = 0; k < points.size(); ++k) w = orbit_step(fam, lambda, w, cfg);
            return w;
        };
        const SpherePoint a = ret(z0 + h), b = ret(z0 - h);
        if (a.is_finite() && b.is_finite())
            return normalize((a.value() - b.value()) / (2.0 * h), kOverflowGuard);
    }
    return SpherePoint::infinity();
}

inline CycleRecord build_cycle(const FamilyDescriptor& fam, cplx lambda, const SpherePoint& z0,
                               int period, const RunConfig& cfg) {
    CycleRecord rec;
    rec.period = period;
    rec.points.reserve(period);
    SpherePoint w = z0;
    for (int k = 0; k < period; ++k) {
        rec.points.push_back(w);
        w = orbit_step(fam, lambda, w, cfg);
    }
    rec.multiplier = cycle_multiplier(fam, lambda, rec.points, cfg);
    rec.stability = classify_stability(rec.multiplier, cfg.stability_margin);
    return rec;
}

// Newton on f^p(z) - z from a finite seed; returns the converged root with
// its residual, without minimal-period policy (callers decide).
inline std::optional<cplx> newton_periodic_point(const FamilyDescriptor& fam, cplx lambda,
                                                 int period, cplx seed, const RunConfig& cfg) {
    cplx z = seed;
    cplx best_z = seed;
    double best_res = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int it = 0; it < kMaxNewton; ++it) {
        const IterateResult r = iterate_with_derivative(fam, lambda, z, period, cfg);
        if (!r.ok) break;
        const double res = chordal_distance(SpherePoint::finite(r.value), SpherePoint::finite(z));
        if (res < best_res) {
            best_res = res;
            best_z = z;
            stalls = 0;
        } else if (++stalls > 6) {
            break;
        }
        if (res < 1e-15) break;
        const cplx g = r.value - z;
        const cplx gp = r.deriv - 1.0;
        if (std::abs(gp) < 1e-300) break;
        const cplx step = g / gp;
        if (!is_finite_number(step) || std::abs(step) > 1e8) break;
        z -= step;
        if (!is_finite_number(z)) break;
    }
    if (best_res < kRefineTol) return best_z;
    return std::nullopt;
}

inline std::vector<int> proper_divisors(int p) {
    std::vector<int> d;
    for (int k = 1; k < p; ++k)
        if (p % k == 0) d.push_back(k);
    return d;
}

// Minimal period of a converged periodic point (divisor scan).
inline int minimal_period(const FamilyDescriptor& fam, cplx lambda, cplx z, int period,
                          const RunConfig& cfg) {
    for (int d : proper_divisors(period)) {
        const IterateResult r = iterate_with_derivative(fam, lambda, z, d, cfg);
        if (r.ok && chordal_distance(SpherePoint::finite(r.value), SpherePoint::finite(z)) < 1e-9)
            return d;
    }
    return period;
}

// Smallest period whose shifted tail matches over the trailing window.
inline std::optional<int> find_recurrence(const std::vector<SpherePoint>& pts, double cycle_tol) {
    const int last = static_cast<int>(pts.size()) - 1;
    for (int p = 1; p <= kMaxPeriod && p < last; ++p) {
        // verification window: last quarter of the orbit, at least two periods
        const int window = std::min(last - p, std::max(2 * p, (last + 3) / 4));
        bool ok = true;
        for (int k = 0; k <= window && ok; ++k)
            ok = chordal_distance(pts[last - k], pts[last - p - k]) < cycle_tol;
        if (ok) return p;
    }
    return std::nullopt;
}

}  // namespace detail

// Extracts the cycle a converged orbit tail is settling on: minimal-period
// recurrence scan, then Newton refinement of f^p(z) = z to residual < 1e-12.
inline std::optional<CycleRecord> detect_cycle(const FamilyDescriptor& fam, cplx lambda,
                                               const std::vector<SpherePoint>& tail,
                                               double cycle_tol, const RunConfig& cfg = {}) {
    if (tail.empty()) return std::nullopt;
    RunConfig c = cfg;
    c.cycle_tol = cycle_tol;
    if (tail.back().is_inf()) {
        // only a fixed point at infinity is representable (rational families)
        if (!fam.infinity_in_domain) return std::nullopt;
        const SpherePoint img = evaluate(fam, lambda, SpherePoint::infinity(), c.escape_radius);
        if (!img.is_inf()) return std::nullopt;
        CycleRecord rec;
        rec.period = 1;
        rec.points = {SpherePoint::infinity()};
        rec.multiplier = detail::multiplier_at_infinity(fam, lambda);
        rec.stability = detail::classify_stability(rec.multiplier, c.stability_margin);
        return rec;
    }
    const auto p = detail::find_recurrence(tail, cycle_tol);
    if (!p) return std::nullopt;
    const auto root = detail::newton_periodic_point(fam, lambda, *p, tail.back().value(), c);
    if (!root) return std::nullopt;
    const int minimal = detail::minimal_period(fam, lambda, *root, *p, c);
    return detail::build_cycle(fam, lambda, SpherePoint::finite(*root), minimal, c);
}

// Newton search for a cycle of exactly the requested minimal period.
// Solutions of strictly smaller minimal period are rejected.
inline std::optional<CycleRecord> find_cycle_newton(const FamilyDescriptor& fam, cplx lambda,
                                                    int period, const SpherePoint& seed,
                                                    const RunConfig& cfg = {}) {
    if (period < 1 || seed.is_inf()) return std::nullopt;
    const auto root = detail::newton_periodic_point(fam, lambda, period, seed.value(), cfg);
    if (!root) return std::nullopt;
    if (detail::minimal_period(fam, lambda, *root, period, cfg) != period) return std::nullopt;
    return detail::build_cycle(fam, lambda, SpherePoint::finite(*root), period, cfg);
}

// Iterates z0 until a fate is decided or cfg.max_iter is exhausted.
//   - meromorphic: an iterate at infinity truncates the orbit;
//   - entire: infinity or three consecutive exits past the escape radius
//     mean escape toward the essential singularity;
//   - rational: infinity is in the domain, so escape shows up as capture by
//     a (super)attracting fixed point at infinity.
inline OrbitRecord iterate_orbit(const FamilyDescriptor& fam, cplx lambda, const SpherePoint& z0,
                                 const RunConfig& cfg = {}) {
    if (z0.is_inf() && !fam.infinity_in_domain) throw Error("outside domain");
    OrbitRecord rec;
    rec.lambda = lambda;
    rec.start = z0;
    rec.points.push_back(z0);
    rec.fate = OrbitFate{FateKind::Undecided, cfg.max_iter, std::nullopt};

    int exceed_run = 0;
    int next_detect = 1;
    for (int step = 1; step <= cfg.max_iter; ++step) {
        const SpherePoint nxt = detail::orbit_step(fam, lambda, rec.points.back(), cfg);
        rec.points.push_back(nxt);
        if (nxt.is_inf()) {
            if (fam.is_meromorphic()) {
                rec.fate = OrbitFate{FateKind::Truncated, step, std::nullopt};
                return rec;
            }
            if (fam.is_entire()) {
                rec.fate = OrbitFate{FateKind::Escaping, step, std::nullopt};
                return rec;
            }
            // rational: keep iterating at infinity; capture logic below
        } else if (std::abs(nxt.value()) > cfg.escape_radius) {
            if (fam.is_entire() && ++exceed_run >= 3) {
                rec.fate = OrbitFate{FateKind::Escaping, step - 2, std::nullopt};
                return rec;
            }
        } else {
            exceed_run = 0;
        }

        if (step >= next_detect) {
            const auto p = detail::find_recurrence(rec.points, cfg.cycle_tol);
            if (p) {
                const auto cyc = detect_cycle(fam, lambda, rec.points, cfg.cycle_tol, cfg);
                if (cyc && cyc->stability == Stability::Attracting) {
                    int entry = 0;
                    for (int k = 0; k <= step; ++k) {
                        double dmin = 4.0;
                        for (const auto& cp : cyc->points)
                            dmin = std::min(dmin, chordal_distance(rec.points[k], cp));
                        if (dmin < cfg.cycle_tol) {
                            entry = k;
                            break;
                        }
                    }
                    rec.fate = OrbitFate{FateKind::Captured, entry, cyc};
                    return rec;
                }
                // recurrence without attracting capture (repelling hit,
                // parabolic drift): back off geometrically
                next_detect = step * 2;
            }
        }
    }
    return rec;
}

// Random inverse iteration from a seed: repeatedly applies a uniformly drawn
// inverse branch, deterministic for a given rng seed. Burn-in of 20 steps.
inline std::vector<SpherePoint> backward_sample(const FamilyDescriptor& fam, cplx lambda,
                                                const SpherePoint& seed, int n_samples,
                                                std::uint64_t rng_seed) {
    if (!fam.inverse_branches) throw Error("missing inverse capability");
    std::mt19937_64 rng(rng_seed);
    const int lo = fam.branch_range.first;
    const std::uint64_t span = static_cast<std::uint64_t>(fam.branch_range.second - lo + 1);
    std::vector<SpherePoint> out;
    out.reserve(n_samples);
    SpherePoint cur = seed;
    const int burn_in = 20;
    for (int i = 0; i < n_samples + burn_in; ++i) {
        SpherePoint nxt;
        bool found = false;
        for (int attempt = 0; attempt < 16 && !found; ++attempt) {
            const int k = lo + static_cast<int>(rng() % span);
            nxt = fam.inverse_branches(lambda, cur, k);
            found = nxt.is_finite() && is_finite_number(nxt.value());
        }
        if (!found) throw Error("inverse branch failed");
        cur = nxt;
        if (i >= burn_in) out.push_back(cur);
    }
    return out;
}

// --- JSON -------------------------------------------------------------

inline void to_json(nlohmann::json& j, const CycleRecord& c) {
    j = nlohmann::json{{"period", c.period},
                       {"points", c.points},
                       {"multiplier", c.multiplier},
                       {"stability", to_string(c.stability)}};
}

inline void from_json(const nlohmann::json& j, CycleRecord& c) {
    c.period = j.at("period").get<int>();
    c.points = j.at("points").get<std::vector<SpherePoint>>();
    c.multiplier = j.at("multiplier").get<SpherePoint>();
    const auto s = j.at("stability").get<std::string>();
    c.stability = s == "attracting" ? Stability::Attracting
                : s == "repelling"  ? Stability::Repelling
                                    : Stability::Indifferent;
}

inline void to_json(nlohmann::json& j, const OrbitFate& f) {
    j = nlohmann::json{{"kind", to_string(f.kind)}, {"step", f.step}};
    if (f.cycle) j["cycle"] = *f.cycle;
}

inline void to_json(nlohmann::json& j, const OrbitRecord& r) {
    j = nlohmann::json{
        {"lambda", r.lambda}, {"start", r.start}, {"points", r.points}, {"fate", r.fate}};
}

}  // namespace biflab
