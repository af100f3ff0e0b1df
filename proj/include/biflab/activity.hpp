// Passive/active classification of singular values on small parameter disks,
// the per-pixel activity indicator, and detection of Misiurewicz relations.
//
// Normality is not decidable numerically; the operational proxies are
//   - persistent vs non-persistent truncation patterns,
//   - capture by continuously matching attracting cycles,
//   - the chordal diameter of the parameter-indexed orbit cloud.
// Every verdict carries the sampling parameters that produced it.

#pragma once

#include <numbers>
#include <set>
#include <vector>

#include "biflab/orbit.hpp"

namespace biflab {

enum class PassiveReason { PersistentTruncation, AttractingCapture, UniformlyBounded };
enum class ActiveEvidence { FateHeterogeneity, NonPersistentTruncation, DiameterBlowup };

struct ActivityVerdict {
    enum class Kind { Passive, Active, Unknown };
    Kind kind = Kind::Unknown;
    std::optional<PassiveReason> reason;
    std::optional<ActiveEvidence> evidence;
    int samples_used = 0;
    double disk_radius = 0.0;

    bool passive() const { return kind == Kind::Passive; }
    bool active() const { return kind == Kind::Active; }
    bool decided() const { return kind != Kind::Unknown; }
};

inline std::string to_string(ActivityVerdict::Kind k) {
    switch (k) {
        case ActivityVerdict::Kind::Passive: return "passive";
        case ActivityVerdict::Kind::Active: return "active";
        case ActivityVerdict::Kind::Unknown: return "unknown";
    }
    return "?";
}

inline std::string to_string(PassiveReason r) {
    switch (r) {
        case PassiveReason::PersistentTruncation: return "persistent-truncation";
        case PassiveReason::AttractingCapture: return "attracting-capture";
        case PassiveReason::UniformlyBounded: return "uniformly-bounded";
    }
    return "?";
}

inline std::string to_string(ActiveEvidence e) {
    switch (e) {
        case ActiveEvidence::FateHeterogeneity: return "fate-heterogeneity";
        case ActiveEvidence::NonPersistentTruncation: return "non-persistent-truncation";
        case ActiveEvidence::DiameterBlowup: return "diameter-blowup";
    }
    return "?";
}

inline void to_json(nlohmann::json& j, const ActivityVerdict& v) {
    j = nlohmann::json{{"verdict", to_string(v.kind)},
                       {"samples_used", v.samples_used},
                       {"disk_radius", v.disk_radius}};
    if (v.reason) j["reason"] = to_string(*v.reason);
    if (v.evidence) j["evidence"] = to_string(*v.evidence);
}

namespace detail {

// Fixed sampling pattern: center, 8 points on the radius-r ring, remaining
// points on the r/2 ring. Deterministic by construction.
inline std::vector<cplx> sample_disk(cplx center, double radius, int n_samples) {
    std::vector<cplx> out;
    out.reserve(n_samples);
    out.push_back(center);
    const int outer = std::min(8, n_samples - 1);
    for (int k = 0; k < outer; ++k) {
        const double th = 2.0 * std::numbers::pi * k / outer;
        out.push_back(center + radius * cplx(std::cos(th), std::sin(th)));
    }
    const int inner = n_samples - 1 - outer;
    for (int k = 0; k < inner; ++k) {
        const double th = 2.0 * std::numbers::pi * (k + 0.5) / inner;
        out.push_back(center + 0.5 * radius * cplx(std::cos(th), std::sin(th)));
    }
    return out;
}

// Supremum over n <= max_iter of the chordal diameter of the sample cloud
// {f_lambda^n(v(lambda))}. Early exit once the threshold is exceeded.
inline double lockstep_diameter(const FamilyDescriptor& fam, const std::vector<cplx>& lambdas,
                                const std::vector<SpherePoint>& starts, double threshold,
                                const RunConfig& cfg) {
    std::vector<SpherePoint> zs = starts;
    double sup = 0.0;
    for (int n = 0; n < cfg.max_iter; ++n) {
        for (size_t s = 0; s < zs.size(); ++s) zs[s] = orbit_step(fam, lambdas[s], zs[s], cfg);
        double diam = 0.0;
        for (size_t a = 0; a < zs.size(); ++a)
            for (size_t b = a + 1; b < zs.size(); ++b)
                diam = std::max(diam, chordal_distance(zs[a], zs[b]));
        sup = std::max(sup, diam);
        if (sup >= threshold) return sup;
    }
    return sup;
}

}  // namespace detail

// Decides passivity/activity of singular value sv_index on the disk
// B(lambda0, radius) from center + two-ring samples.
inline ActivityVerdict classify(const FamilyDescriptor& fam, int sv_index, cplx lambda0,
                                double radius, const RunConfig& cfg = {}, int n_samples = 25) {
    if (radius <= 0) throw Error("radius must be positive");
    if (n_samples < 9) throw Error("need at least 9 samples");
    if (sv_index < 0 || sv_index >= static_cast<int>(fam.singular_values.size()))
        throw Error("singular value index out of range");
    const auto& sv = fam.singular_values[sv_index];

    const auto lambdas = detail::sample_disk(lambda0, radius, n_samples);
    ActivityVerdict out;
    out.samples_used = n_samples;
    out.disk_radius = radius;

    std::vector<OrbitRecord> recs;
    std::vector<SpherePoint> starts;
    recs.reserve(lambdas.size());
    for (const cplx lam : lambdas) {
        starts.push_back(sv.value(lam));
        recs.push_back(iterate_orbit(fam, lam, starts.back(), cfg));
    }

    // (i)/(ii): truncation patterns
    int truncated = 0;
    for (const auto& r : recs) truncated += r.fate.kind == FateKind::Truncated;
    if (truncated == static_cast<int>(recs.size())) {
        bool same_step = true;
        for (const auto& r : recs) same_step = same_step && r.fate.step == recs[0].fate.step;
        out.kind = same_step ? ActivityVerdict::Kind::Passive : ActivityVerdict::Kind::Active;
        if (same_step)
            out.reason = PassiveReason::PersistentTruncation;
        else
            out.evidence = ActiveEvidence::NonPersistentTruncation;
        return out;
    }
    if (truncated > 0) {
        out.kind = ActivityVerdict::Kind::Active;
        out.evidence = ActiveEvidence::NonPersistentTruncation;
        return out;
    }

    // capture by continuously matching cycles: equal period and equal
    // infinity-membership across all samples. Captures at infinity must also
    // happen in near-synchrony: right next to the locus every sample escapes,
    // but at wildly different times (a Misiurewicz disk at machine precision
    // looks all-escaping), and escape steps are chart-robust where chordal
    // diameters are not.
    bool all_captured = true;
    for (const auto& r : recs) all_captured = all_captured && r.fate.kind == FateKind::Captured;
    bool capture_mismatch = false;
    if (all_captured) {
        const int period = recs[0].fate.cycle->period;
        const bool at_inf = recs[0].fate.cycle->contains_infinity();
        bool match = true;
        for (const auto& r : recs)
            match = match && r.fate.cycle->period == period &&
                    r.fate.cycle->contains_infinity() == at_inf;
        if (match && at_inf) {
            int lo = cfg.max_iter, hi = 0;
            for (const auto& r : recs) {
                lo = std::min(lo, r.fate.step);
                hi = std::max(hi, r.fate.step);
            }
            match = hi - lo <= std::max(6, lo);
        }
        if (match) {
            out.kind = ActivityVerdict::Kind::Passive;
            out.reason = PassiveReason::AttractingCapture;
            return out;
        }
        capture_mismatch = true;
    }

    // orbit-cloud diameter
    const double sup =
        detail::lockstep_diameter(fam, lambdas, starts, cfg.diam_threshold, cfg);
    if (sup >= cfg.diam_threshold) {
        out.kind = ActivityVerdict::Kind::Active;
        out.evidence = ActiveEvidence::DiameterBlowup;
        return out;
    }

    std::set<FateKind> decided_kinds;
    for (const auto& r : recs)
        if (r.fate.kind != FateKind::Undecided) decided_kinds.insert(r.fate.kind);
    if (capture_mismatch || decided_kinds.size() > 1) {
        out.kind = ActivityVerdict::Kind::Active;
        out.evidence = ActiveEvidence::FateHeterogeneity;
        return out;
    }
    out.kind = ActivityVerdict::Kind::Passive;
    out.reason = PassiveReason::UniformlyBounded;
    return out;
}

// Cheap scalar for rendering. 0 for captured orbits (period reported apart),
// 1/(1+step) for truncated ones, and a normalized lambda-derivative growth
// rate for escaping/undecided orbits.
inline double activity_indicator(const FamilyDescriptor& fam, int sv_index, cplx lambda,
                                 const RunConfig& cfg = {}) {
    const auto& sv = fam.singular_values[sv_index];
    const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), cfg);
    switch (rec.fate.kind) {
        case FateKind::Captured: return 0.0;
        case FateKind::Truncated: return 1.0 / (1.0 + rec.fate.step);
        default: break;
    }
    const int N = static_cast<int>(rec.points.size()) - 1;
    if (N < 1) return 0.0;
    const double h = 1e-6 * std::max(1.0, std::abs(lambda));
    const cplx lam2 = lambda + h;
    SpherePoint w = sv.value(lam2);
    for (int k = 0; k < N && w.is_finite(); ++k) w = detail::orbit_step(fam, lam2, w, cfg);
    const double growth = chordal_distance(rec.points[N], w) / h;
    const double raw = std::log1p(growth) / N;
    return raw / (1.0 + raw);
}

struct MisiurewiczRelation {
    int n = 0;  // orbit depth: from the critical point for critical singular
                // values, from the value itself for asymptotic ones
    SpherePoint point;
    CycleRecord cycle;
};

// Scans the first n_max singular-orbit points for a coincidence (within tol)
// with a repelling cycle located by Newton from that point.
inline std::vector<MisiurewiczRelation> misiurewicz_check(const FamilyDescriptor& fam,
                                                          int sv_index, cplx lambda0, int n_max,
                                                          double tol, const RunConfig& cfg = {},
                                                          int max_period_search = 6) {
    const auto& sv = fam.singular_values[sv_index];
    const bool critical = sv.kind == SingularValue::Kind::Critical && sv.critical_point;
    SpherePoint p = critical ? sv.critical_point(lambda0) : sv.value(lambda0);
    std::vector<MisiurewiczRelation> out;
    const int first_n = critical ? 1 : 0;
    for (int n = first_n; n <= n_max; ++n) {
        if (critical || n > first_n) p = detail::orbit_step(fam, lambda0, p, cfg);
        if (p.is_inf()) break;
        for (int period = 1; period <= max_period_search; ++period) {
            const auto cyc = find_cycle_newton(fam, lambda0, period, p, cfg);
            if (!cyc || cyc->stability != Stability::Repelling) continue;
            double dmin = 4.0;
            for (const auto& q : cyc->points) dmin = std::min(dmin, chordal_distance(p, q));
            if (dmin < tol) {
                out.push_back(MisiurewiczRelation{n, p, *cyc});
                break;
            }
        }
    }
    return out;
}

inline void to_json(nlohmann::json& j, const MisiurewiczRelation& r) {
    j = nlohmann::json{{"n", r.n}, {"point", r.point}, {"cycle", r.cycle}};
}

}  // namespace biflab
