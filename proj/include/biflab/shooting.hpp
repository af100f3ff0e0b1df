// Newton shooting in parameter space: solves finite orbit relations
// f_lambda^n(v(lambda)) = gamma(lambda) to locate prepole/truncation
// parameters, Misiurewicz parameters and virtual cycles, and verifies the
// attracting cycles created near virtual cycles.
//
// Pole targets are solved in the reciprocal chart (residual 1/f^n(v)) so the
// Newton residual stays finite and smooth.

#pragma once

#include <vector>

#include "biflab/continuation.hpp"
#include "biflab/orbit.hpp"

namespace biflab {

struct ShootingProblem {
    const FamilyDescriptor* fam = nullptr;
    int sv_index = 0;
    int depth = 0;  // applications of f to the singular value v
    std::function<SpherePoint(cplx)> target;  // finite-valued; ignored for pole targets
    bool pole_target = false;
    cplx seed{};
    double tol = 1e-10;
};

struct ShotResult {
    cplx lambda_star{};
    double residual = 0.0;   // chordal residual of the defining relation
    double deriv_mag = 0.0;  // |dH/dlambda| at the solution (persistence filter)
};

namespace detail {

// Orbit point f^depth(v(lambda)); nullopt when an intermediate iterate
// truncates before reaching the requested depth.
inline std::optional<SpherePoint> orbit_point_at_depth(const FamilyDescriptor& fam, cplx lambda,
                                                       int sv_index, int depth,
                                                       const RunConfig& cfg) {
    SpherePoint w = fam.singular_values[sv_index].value(lambda);
    for (int k = 0; k < depth; ++k) {
        if (w.is_inf()) return std::nullopt;  // truncated before depth
        w = orbit_step(fam, lambda, w, cfg);
    }
    return w;
}

}  // namespace detail

// Damped Newton on the residual map with central finite differences in
// lambda. Success iff the chordal residual of the relation drops below tol.
inline std::optional<ShotResult> shoot(const ShootingProblem& problem, int max_newton = 60,
                                       const RunConfig& cfg = {}) {
    const auto& fam = *problem.fam;

    // complex residual for Newton and chordal residual of the relation
    auto eval_residual = [&](cplx lam) -> std::optional<std::pair<cplx, double>> {
        const auto w = detail::orbit_point_at_depth(fam, lam, problem.sv_index, problem.depth, cfg);
        if (!w) return std::nullopt;
        if (problem.pole_target) {
            const cplx h = w->is_inf() ? cplx(0.0, 0.0) : 1.0 / w->value();
            if (!is_finite_number(h)) return std::nullopt;
            return std::make_pair(h, chordal_distance(*w, SpherePoint::infinity()));
        }
        const SpherePoint t = problem.target(lam);
        if (w->is_inf() || t.is_inf()) return std::nullopt;
        return std::make_pair(w->value() - t.value(), chordal_distance(*w, t));
    };

    cplx lam = problem.seed;
    auto cur = eval_residual(lam);
    if (!cur) return std::nullopt;
    cplx best_lam = lam;
    double best_res = cur->second;
    double deriv_mag = 0.0;
    // drive well past tol: a deep pole hit must survive independent
    // re-evaluation of the relation
    for (int it = 0; it < max_newton && cur->second > 1e-15; ++it) {
        const double delta = 1e-7 * std::max(1.0, std::abs(lam));
        const auto plus = eval_residual(lam + delta);
        const auto minus = eval_residual(lam - delta);
        if (!plus || !minus) break;
        const cplx dH = (plus->first - minus->first) / (2.0 * delta);
        deriv_mag = std::abs(dH);
        if (!(deriv_mag > 1e-300)) break;
        const cplx full_step = cur->first / dH;
        if (!is_finite_number(full_step)) break;
        // damping: retreat while the residual grows
        double damp = 1.0;
        bool moved = false;
        for (int half = 0; half < 9 && !moved; ++half) {
            const cplx trial = lam - damp * full_step;
            const auto r = eval_residual(trial);
            if (r && r->second < cur->second) {
                lam = trial;
                cur = r;
                moved = true;
            }
            damp /= 2.0;
        }
        if (!moved) break;
        if (cur->second < best_res) {
            best_res = cur->second;
            best_lam = lam;
        }
    }
    if (best_res < problem.tol) return ShotResult{best_lam, best_res, deriv_mag};
    return std::nullopt;
}

struct VirtualCycleRecord {
    cplx lambda_vc{};
    int length = 0;  // n+1 for a depth-n boundary hit
    std::vector<SpherePoint> chain;  // v, f(v), ..., f^n(v) = inf
    int sv_index = 0;
};

inline void to_json(nlohmann::json& j, const VirtualCycleRecord& r) {
    j = nlohmann::json{
        {"lambda_vc", r.lambda_vc}, {"length", r.length}, {"chain", r.chain}, {"sv", r.sv_index}};
}

namespace detail {

inline std::vector<cplx> seed_ring(cplx center, double radius, std::initializer_list<double> radii,
                                   int angles) {
    std::vector<cplx> seeds{center};
    for (double f : radii) {
        for (int k = 0; k < angles; ++k) {
            const double th = 2.0 * std::numbers::pi * k / angles;
            seeds.push_back(center + f * radius * cplx(std::cos(th), std::sin(th)));
        }
    }
    return seeds;
}

inline bool near_any(const std::vector<cplx>& set, cplx x, double tol) {
    for (const cplx s : set)
        if (std::abs(s - x) < tol) return true;
    return false;
}

}  // namespace detail

// Prepole parameters: solves f^n(v(lambda)) = infinity for each requested
// depth from deterministic seed rings around lambda0. For asymptotic singular
// values the records are simple virtual cycles of length n+1.
inline std::vector<VirtualCycleRecord> find_truncation_parameters(
    const FamilyDescriptor& fam, int sv_index, cplx lambda0, const std::vector<int>& depths,
    double search_radius, const RunConfig& cfg = {}) {
    if (!fam.is_meromorphic()) throw Error("no boundary to hit");
    std::vector<VirtualCycleRecord> out;
    std::vector<cplx> found;
    for (const int depth : depths) {
        if (depth < 1) continue;
        ShootingProblem prob;
        prob.fam = &fam;
        prob.sv_index = sv_index;
        prob.depth = depth;
        prob.pole_target = true;
        prob.tol = 1e-10;
        for (const cplx seed : detail::seed_ring(lambda0, search_radius, {0.15, 0.35, 0.6, 0.85}, 12)) {
            prob.seed = seed;
            const auto res = shoot(prob, 60, cfg);
            if (!res) continue;
            if (std::abs(res->lambda_star - lambda0) > search_radius) continue;
            if (detail::near_any(found, res->lambda_star, 1e-8)) continue;
            // verify the chain by evaluation: finite until the final step,
            // which must land on the boundary to residual 1e-8
            VirtualCycleRecord rec;
            rec.lambda_vc = res->lambda_star;
            rec.length = depth + 1;
            rec.sv_index = sv_index;
            SpherePoint w = fam.singular_values[sv_index].value(res->lambda_star);
            bool valid = true;
            for (int k = 0; k < depth && valid; ++k) {
                rec.chain.push_back(w);
                valid = w.is_finite();
                if (valid) w = detail::orbit_step(fam, res->lambda_star, w, cfg);
            }
            valid = valid && chordal_distance(w, SpherePoint::infinity()) < 1e-8;
            if (!valid) continue;
            rec.chain.push_back(SpherePoint::infinity());
            found.push_back(res->lambda_star);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

namespace detail {

// Continued cycle point: predictor-corrector march of cycle point k from
// lambda0 to lambda. nullopt when Newton loses the point or the minimal
// period collapses (the continuation genuinely breaking down).
inline std::optional<cplx> continue_point_to(const FamilyDescriptor& fam,
                                             const CycleRecord& cycle, int point_index,
                                             cplx lambda0, cplx lambda, const RunConfig& cfg,
                                             double max_step = 1e-2) {
    if (cycle.points[point_index].is_inf()) return std::nullopt;
    cplx z = cycle.points[point_index].value();
    const double len = std::abs(lambda - lambda0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / max_step)));
    for (int s = 1; s <= steps; ++s) {
        const cplx lam = lambda0 + (lambda - lambda0) * (double(s) / steps);
        const auto root = newton_periodic_point(fam, lam, cycle.period, z, cfg);
        if (!root) return std::nullopt;
        z = *root;
    }
    if (minimal_period(fam, lambda, z, cycle.period, cfg) != cycle.period) return std::nullopt;
    return z;
}

}  // namespace detail

// Misiurewicz parameters inside B(lambda0, radius): solves
// f^n(v(lambda)) = z(lambda) against every point of the continued repelling
// target cycle. n counts from the critical point for critical singular
// values and from v itself for asymptotic ones. Persistent relations
// (vanishing residual derivative) are filtered out.
inline std::vector<cplx> find_misiurewicz(const FamilyDescriptor& fam, int sv_index, cplx lambda0,
                                          int n, const CycleRecord& repelling_target,
                                          double radius, const RunConfig& cfg = {}) {
    if (repelling_target.stability != Stability::Repelling) throw Error("target not repelling");
    const auto& sv = fam.singular_values[sv_index];
    const bool critical = sv.kind == SingularValue::Kind::Critical && sv.critical_point;
    const int depth = critical ? n - 1 : n;
    if (depth < 0) return {};

    // precondition: the continuation of the target exists on the search disk
    for (int k = 0; k < 8; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 8.0;
        const cplx rim = lambda0 + radius * cplx(std::cos(th), std::sin(th));
        if (!detail::continue_point_to(fam, repelling_target, 0, lambda0, rim, cfg))
            throw Error("target cycle unstable on disk");
    }

    std::vector<cplx> found;
    for (int pt = 0; pt < repelling_target.period; ++pt) {
        ShootingProblem prob;
        prob.fam = &fam;
        prob.sv_index = sv_index;
        prob.depth = depth;
        prob.tol = 1e-10;
        prob.target = [&, pt](cplx lam) -> SpherePoint {
            const auto z = detail::continue_point_to(fam, repelling_target, pt, lambda0, lam, cfg);
            if (!z) return SpherePoint::infinity();  // invalid trial for the solver
            return SpherePoint::finite(*z);
        };
        for (const cplx seed : detail::seed_ring(lambda0, radius, {0.3, 0.6}, 8)) {
            prob.seed = seed;
            const auto res = shoot(prob, 60, cfg);
            if (!res) continue;
            // slack on the containment filter: the search disk is a scale,
            // roots just past the rim still belong to it
            if (std::abs(res->lambda_star - lambda0) > 1.25 * radius) continue;
            if (res->deriv_mag <= 1e-8) continue;  // persistent relation
            if (detail::near_any(found, res->lambda_star, 1e-8)) continue;
            // the landed-on cycle must still be repelling there
            const auto z = detail::continue_point_to(fam, repelling_target, pt, lambda0,
                                                     res->lambda_star, cfg);
            if (!z) continue;
            const auto cyc = detail::build_cycle(fam, res->lambda_star, SpherePoint::finite(*z),
                                                 repelling_target.period, cfg);
            if (cyc.stability != Stability::Repelling) continue;
            found.push_back(res->lambda_star);
        }
    }
    std::sort(found.begin(), found.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return found;
}

struct AttractingWitness {
    cplx lambda{};
    int period = 0;
    SpherePoint multiplier;
};

inline void to_json(nlohmann::json& j, const AttractingWitness& w) {
    j = nlohmann::json{{"lambda", w.lambda}, {"period", w.period}, {"multiplier", w.multiplier}};
}

// Confirms the creation of attracting cycles near a virtual cycle: shoots the
// singular orbit onto pre-pole proxy points w_k = R_k * tract_direction with
// R_k = 10 * 2^k, then checks by forward iteration that the singular value is
// captured by an attracting cycle of period length(vc) with strictly
// decreasing multiplier modulus.
inline std::vector<AttractingWitness> verify_attracting_near_virtual(const FamilyDescriptor& fam,
                                                                     const VirtualCycleRecord& vc,
                                                                     int k_max,
                                                                     const RunConfig& cfg = {}) {
    const auto& sv = fam.singular_values[vc.sv_index];
    if (sv.kind != SingularValue::Kind::Asymptotic) throw Error("virtual cycle needs an asymptotic value");
    if (!sv.tract_direction) throw Error("no tract direction");

    const int depth = vc.length - 1;
    std::vector<AttractingWitness> out;
    std::optional<cplx> prev_lambda;
    double prev_mult = std::numeric_limits<double>::infinity();

    for (int k = 1; k <= k_max; ++k) {
        const double R = 10.0 * std::pow(2.0, k);
        ShootingProblem prob;
        prob.fam = &fam;
        prob.sv_index = vc.sv_index;
        prob.depth = depth;
        prob.tol = 1e-9;
        prob.target = [&, R](cplx lam) {
            return SpherePoint::finite(R * sv.tract_direction(lam));
        };
        std::vector<cplx> seeds;
        if (prev_lambda) {
            seeds.push_back(*prev_lambda);
            const double d = std::abs(*prev_lambda - vc.lambda_vc);
            for (int a = 0; a < 4; ++a) {
                const double th = 2.0 * std::numbers::pi * a / 4.0;
                seeds.push_back(vc.lambda_vc +
                                0.5 * d * cplx(std::cos(th), std::sin(th)));
            }
        } else {
            const double scale = std::max(1.0, std::abs(vc.lambda_vc));
            for (double f : {0.3, 0.15, 0.08, 0.04, 0.02, 0.01}) {
                for (int a = 0; a < 8; ++a) {
                    const double th = 2.0 * std::numbers::pi * a / 8.0;
                    seeds.push_back(vc.lambda_vc + f * scale * cplx(std::cos(th), std::sin(th)));
                }
            }
        }
        for (const cplx seed : seeds) {
            prob.seed = seed;
            const auto res = shoot(prob, 80, cfg);
            if (!res) continue;
            const auto orbit =
                iterate_orbit(fam, res->lambda_star, sv.value(res->lambda_star), cfg);
            if (orbit.fate.kind != FateKind::Captured) continue;
            const auto& cyc = *orbit.fate.cycle;
            if (cyc.period != vc.length) continue;
            if (!cyc.multiplier.is_finite()) continue;
            const double m = std::abs(cyc.multiplier.value());
            if (!(m < prev_mult)) continue;
            out.push_back(AttractingWitness{res->lambda_star, cyc.period, cyc.multiplier});
            prev_lambda = res->lambda_star;
            prev_mult = m;
            break;
        }
    }
    if (out.size() < 2) throw Error("virtual cycle not confirmed");
    return out;
}

}  // namespace biflab
