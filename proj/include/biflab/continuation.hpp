// Numerical holomorphic motion: predictor-corrector continuation of repelling
// cycles and finite backward orbits along parameter paths, with the failure
// modes that signal the bifurcation locus (multiplier crossing, Newton
// collapse, collision with the singular orbit).

#pragma once

#include <vector>

#include "biflab/activity.hpp"
#include "biflab/orbit.hpp"

namespace biflab {

enum class AbortReason { MultiplierCrossed, NewtonFailed, SingularCollision };

inline std::string to_string(AbortReason r) {
    switch (r) {
        case AbortReason::MultiplierCrossed: return "multiplier-crossed";
        case AbortReason::NewtonFailed: return "newton-failed";
        case AbortReason::SingularCollision: return "singular-collision";
    }
    return "?";
}

struct StepControl {
    double max_step = 1e-2;
    double shrink_factor = 2.0;
    int max_halvings = 20;
};

struct MotionTrace {
    std::vector<cplx> path;  // accepted lambda samples, path[0] = basepoint
    // tracked[i][j] = position of tracked point i at path[j]
    std::vector<std::vector<SpherePoint>> tracked;
    enum class Status { Completed, Aborted };
    Status status = Status::Completed;
    AbortReason reason = AbortReason::NewtonFailed;
    cplx at_lambda{};
    // backward-orbit traces: parent[i] is the index whose point is the image
    // of point i (-1 for the base), depth[i] its preimage depth
    std::vector<int> parents;
    std::vector<int> depths;

    bool completed() const { return status == Status::Completed; }
};

inline void to_json(nlohmann::json& j, const MotionTrace& t) {
    j = nlohmann::json{{"path", t.path}, {"status", t.completed() ? "completed" : "aborted"}};
    auto& tr = j["tracked"] = nlohmann::json::array();
    for (const auto& pts : t.tracked) {
        nlohmann::json one = nlohmann::json::array();
        for (size_t k = 0; k < pts.size(); ++k)
            one.push_back(nlohmann::json{{"lambda", t.path[k]}, {"point", pts[k]}});
        tr.push_back(std::move(one));
    }
    if (!t.completed()) {
        j["abort"] = nlohmann::json{{"reason", to_string(t.reason)}, {"at", t.at_lambda}};
    }
    if (!t.parents.empty()) {
        j["parents"] = t.parents;
        j["depths"] = t.depths;
    }
}

namespace detail {

// Singular orbit prefixes at the trace basepoint; the collision set for
// SingularCollision aborts.
inline std::vector<SpherePoint> singular_orbit_prefixes(const FamilyDescriptor& fam, cplx lambda,
                                                        const RunConfig& cfg, int max_pts = 200) {
    std::vector<SpherePoint> out;
    RunConfig c = cfg;
    c.max_iter = std::min(cfg.max_iter, max_pts);
    for (const auto& sv : fam.singular_values) {
        const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), c);
        for (const auto& p : rec.points) out.push_back(p);
    }
    return out;
}

inline double min_distance_to(const std::vector<SpherePoint>& set, const SpherePoint& p) {
    double d = 4.0;
    for (const auto& q : set) d = std::min(d, chordal_distance(q, p));
    return d;
}

// Newton solve of f^depth(z) = target from a finite seed.
inline std::optional<cplx> newton_preimage(const FamilyDescriptor& fam, cplx lambda, int depth,
                                           cplx target, cplx seed, const RunConfig& cfg) {
    cplx z = seed;
    cplx best_z = seed;
    double best_res = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int it = 0; it < kMaxNewton; ++it) {
        const IterateResult r = iterate_with_derivative(fam, lambda, z, depth, cfg);
        if (!r.ok) break;
        const double res =
            chordal_distance(SpherePoint::finite(r.value), SpherePoint::finite(target));
        if (res < best_res) {
            best_res = res;
            best_z = z;
            stalls = 0;
        } else if (++stalls > 6) {
            break;
        }
        if (res < 1e-15) break;
        if (std::abs(r.deriv) < 1e-300) break;
        const cplx step = (r.value - target) / r.deriv;
        if (!is_finite_number(step) || std::abs(step) > 1e8) break;
        z -= step;
        if (!is_finite_number(z)) break;
    }
    if (best_res < kRefineTol) return best_z;
    return std::nullopt;
}

// Waypoint polyline walker shared by the continuation routines. Calls
// advance(lambda) for each accepted sample; advance returns false to request
// a step halving. Returns false if the step underflows.
template <typename Advance>
bool walk_path(const std::vector<cplx>& waypoints, const StepControl& ctl, Advance&& advance,
               cplx* fail_at) {
    for (size_t seg = 0; seg + 1 < waypoints.size(); ++seg) {
        const cplx a = waypoints[seg], b = waypoints[seg + 1];
        const double len = std::abs(b - a);
        if (len == 0.0) continue;
        double t = 0.0;
        double step = std::min(ctl.max_step, len);
        while (t < len) {
            double trial = step;
            int halvings = 0;
            for (;;) {
                const double t_try = std::min(t + trial, len);
                const cplx lam = a + (b - a) * (t_try / len);
                if (advance(lam)) {
                    t = t_try;
                    step = std::min(ctl.max_step, trial * ctl.shrink_factor);
                    break;
                }
                if (++halvings > ctl.max_halvings) {
                    *fail_at = lam;
                    return false;
                }
                trial /= ctl.shrink_factor;
            }
        }
    }
    return true;
}

}  // namespace detail

// Continues a repelling cycle along the waypoint polyline. Aborts with
// MultiplierCrossed when |multiplier| <= 1 + stability_margin, NewtonFailed
// when the step underflows, SingularCollision when a tracked point meets the
// stored singular orbit prefixes of the basepoint.
inline MotionTrace continue_cycle(const FamilyDescriptor& fam, const CycleRecord& cycle0,
                                  const std::vector<cplx>& lambda_path,
                                  const StepControl& ctl = {}, const RunConfig& cfg = {}) {
    if (cycle0.stability != Stability::Repelling) throw Error("cycle not repelling");
    if (lambda_path.empty()) throw Error("empty path");
    if (cycle0.points.empty() || cycle0.points[0].is_inf())
        throw Error("cycle continuation needs a finite representative");

    const int p = cycle0.period;
    MotionTrace trace;
    trace.tracked.assign(p, {});
    trace.path.push_back(lambda_path[0]);
    for (int i = 0; i < p; ++i) trace.tracked[i].push_back(cycle0.points[i]);

    const auto collision_set =
        detail::singular_orbit_prefixes(fam, lambda_path[0], cfg);

    cplx z = cycle0.points[0].value();
    std::optional<AbortReason> abort;
    cplx abort_at{};

    auto advance = [&](cplx lam) -> bool {
        const auto root = detail::newton_periodic_point(fam, lam, p, z, cfg);
        if (!root) return false;
        if (detail::minimal_period(fam, lam, *root, p, cfg) != p) return false;
        const auto cyc = detail::build_cycle(fam, lam, SpherePoint::finite(*root), p, cfg);
        z = *root;
        trace.path.push_back(lam);
        for (int i = 0; i < p; ++i) trace.tracked[i].push_back(cyc.points[i]);
        if (cyc.stability != Stability::Repelling) {
            abort = AbortReason::MultiplierCrossed;
            abort_at = lam;
            return true;  // sample recorded; stop via abort flag
        }
        for (const auto& q : cyc.points) {
            if (detail::min_distance_to(collision_set, q) < cfg.collision_tol) {
                abort = AbortReason::SingularCollision;
                abort_at = lam;
                return true;
            }
        }
        return true;
    };

    // wrap advance so an abort stops the walk immediately
    cplx fail_at{};
    const bool walked = detail::walk_path(
        lambda_path, ctl,
        [&](cplx lam) {
            if (abort) return true;  // drain remaining steps without work
            return advance(lam);
        },
        &fail_at);
    if (abort) {
        trace.status = MotionTrace::Status::Aborted;
        trace.reason = *abort;
        trace.at_lambda = abort_at;
    } else if (!walked) {
        trace.status = MotionTrace::Status::Aborted;
        trace.reason = AbortReason::NewtonFailed;
        trace.at_lambda = fail_at;
    }
    return trace;
}

// Continues the full preimage tree f^-k(base), k <= depth, along the path.
// The base must be a repelling periodic point at lambda_path[0]. Aborts with
// SingularCollision when two distinct tracked points approach within
// collision_tol (the injectivity failure of the would-be motion).
inline MotionTrace continue_backward_orbit(const FamilyDescriptor& fam, cplx lambda0,
                                           const SpherePoint& base, int depth,
                                           const std::vector<cplx>& lambda_path,
                                           const StepControl& ctl = {}, const RunConfig& cfg = {}) {
    if (!fam.inverse_branches) throw Error("missing inverse capability");
    if (lambda_path.empty() || lambda_path[0] != lambda0) throw Error("path must start at lambda0");
    if (base.is_inf()) throw Error("base must be finite");

    // minimal period of the base
    int period = 0;
    {
        SpherePoint w = base;
        for (int q = 1; q <= detail::kMaxPeriod; ++q) {
            w = detail::orbit_step(fam, lambda0, w, cfg);
            if (chordal_distance(w, base) < 1e-6) {
                period = q;
                break;
            }
        }
    }
    if (period == 0) throw Error("base not periodic");
    const auto base_cycle = find_cycle_newton(fam, lambda0, period, base, cfg);
    if (!base_cycle || base_cycle->stability != Stability::Repelling)
        throw Error("base not repelling");

    struct Node {
        SpherePoint pos;
        int depth = 0;
        int parent = -1;
    };
    std::vector<Node> nodes{{base, 0, -1}};
    size_t level_begin = 0;
    for (int k = 1; k <= depth; ++k) {
        const size_t level_end = nodes.size();
        for (size_t i = level_begin; i < level_end; ++i) {
            for (int b = fam.branch_range.first; b <= fam.branch_range.second; ++b) {
                const auto pre = fam.inverse_branches(lambda0, nodes[i].pos, b);
                if (pre.is_inf() || !is_finite_number(pre.value())) continue;
                bool dup = false;
                for (const auto& n : nodes) dup = dup || chordal_distance(n.pos, pre) < 1e-9;
                if (dup) continue;
                // polish: solve f^k(z) = base exactly
                const auto refined =
                    detail::newton_preimage(fam, lambda0, k, base.value(), pre.value(), cfg);
                if (!refined) continue;
                const SpherePoint rp = SpherePoint::finite(*refined);
                bool dup2 = false;
                for (const auto& n : nodes) dup2 = dup2 || chordal_distance(n.pos, rp) < 1e-9;
                if (dup2) continue;
                nodes.push_back(Node{rp, k, static_cast<int>(i)});
            }
        }
        level_begin = level_end;
    }

    MotionTrace trace;
    trace.tracked.assign(nodes.size(), {});
    trace.path.push_back(lambda0);
    trace.parents.reserve(nodes.size());
    trace.depths.reserve(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        trace.tracked[i].push_back(nodes[i].pos);
        trace.parents.push_back(nodes[i].parent);
        trace.depths.push_back(nodes[i].depth);
    }

    std::vector<cplx> cur(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) cur[i] = nodes[i].pos.value();

    std::optional<AbortReason> abort;
    cplx abort_at{};
    auto advance = [&](cplx lam) -> bool {
        std::vector<cplx> next(cur.size());
        // base first: fixed point of f^period
        const auto broot = detail::newton_periodic_point(fam, lam, period, cur[0], cfg);
        if (!broot) return false;
        next[0] = *broot;
        const auto bcyc = detail::build_cycle(fam, lam, SpherePoint::finite(*broot), period, cfg);
        for (size_t i = 1; i < cur.size(); ++i) {
            const auto root =
                detail::newton_preimage(fam, lam, nodes[i].depth, next[0], cur[i], cfg);
            if (!root) return false;
            next[i] = *root;
        }
        cur = next;
        trace.path.push_back(lam);
        for (size_t i = 0; i < cur.size(); ++i)
            trace.tracked[i].push_back(SpherePoint::finite(cur[i]));
        if (bcyc.stability != Stability::Repelling) {
            abort = AbortReason::MultiplierCrossed;
            abort_at = lam;
            return true;
        }
        for (size_t a = 0; a < cur.size(); ++a)
            for (size_t b = a + 1; b < cur.size(); ++b)
                if (chordal_distance(SpherePoint::finite(cur[a]), SpherePoint::finite(cur[b])) <
                    cfg.collision_tol) {
                    abort = AbortReason::SingularCollision;
                    abort_at = lam;
                    return true;
                }
        return true;
    };

    cplx fail_at{};
    const bool walked = detail::walk_path(
        lambda_path, ctl,
        [&](cplx lam) {
            if (abort) return true;
            return advance(lam);
        },
        &fail_at);
    if (abort) {
        trace.status = MotionTrace::Status::Aborted;
        trace.reason = *abort;
        trace.at_lambda = abort_at;
    } else if (!walked) {
        trace.status = MotionTrace::Status::Aborted;
        trace.reason = AbortReason::NewtonFailed;
        trace.at_lambda = fail_at;
    }
    return trace;
}

struct ProbeWitness {
    std::string kind;  // "trace" or "activity"; empty when stable
    std::optional<AbortReason> trace_reason;
    std::optional<cplx> at_lambda;
    std::optional<int> sv_index;
    std::optional<ActivityVerdict> verdict;
};

struct ProbeResult {
    bool stable = false;
    ProbeWitness witness;
    CycleRecord reference;
};

inline void to_json(nlohmann::json& j, const ProbeResult& r) {
    j = nlohmann::json{{"stable", r.stable}, {"reference", r.reference}};
    if (!r.stable) {
        nlohmann::json w{{"kind", r.witness.kind}};
        if (r.witness.trace_reason) w["reason"] = to_string(*r.witness.trace_reason);
        if (r.witness.at_lambda) w["at"] = *r.witness.at_lambda;
        if (r.witness.sv_index) w["sv"] = *r.witness.sv_index;
        if (r.witness.verdict) w["verdict"] = *r.witness.verdict;
        j["witness"] = w;
    }
}

namespace detail {

// Deterministic seed rings for reference-cycle searches. Angle zero is
// included so that real-axis basins squeezed against poles are reachable.
inline std::vector<SpherePoint> reference_seeds() {
    std::vector<SpherePoint> seeds;
    for (double r : {0.3, 0.7, 1.2, 1.9, 3.0, 4.7}) {
        for (int k = 0; k < 12; ++k) {
            const double th = 2.0 * std::numbers::pi * k / 12.0;
            seeds.push_back(SpherePoint::finite(r * std::cos(th), r * std::sin(th)));
        }
    }
    return seeds;
}

inline std::optional<CycleRecord> find_reference_repelling(const FamilyDescriptor& fam,
                                                           cplx lambda, const RunConfig& cfg,
                                                           int max_period = 4) {
    for (int p = 1; p <= max_period; ++p) {
        for (const auto& seed : reference_seeds()) {
            const auto c = find_cycle_newton(fam, lambda, p, seed, cfg);
            if (c && c->stability == Stability::Repelling && c->points[0].is_finite()) return c;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Probes J-stability at lambda0: continues a reference repelling cycle along
// two diameters and around the circle of the given radius, and requires every
// singular value to classify Passive on the same disk.
inline ProbeResult stability_probe(const FamilyDescriptor& fam, cplx lambda0, double radius,
                                   const RunConfig& cfg = {}, const StepControl& ctl = {}) {
    if (radius <= 0) throw Error("radius must be positive");
    const auto ref = detail::find_reference_repelling(fam, lambda0, cfg);
    if (!ref) throw Error("no reference cycle");

    ProbeResult out;
    out.reference = *ref;

    std::vector<std::vector<cplx>> paths;
    const cplx r(radius, 0.0), ir(0.0, radius);
    paths.push_back({lambda0, lambda0 + r});
    paths.push_back({lambda0, lambda0 - r});
    paths.push_back({lambda0, lambda0 + ir});
    paths.push_back({lambda0, lambda0 - ir});
    // circle: out to the rim, once around, back in
    std::vector<cplx> loop{lambda0};
    const int segs = 16;
    for (int k = 0; k <= segs; ++k) {
        const double th = 2.0 * std::numbers::pi * k / segs;
        loop.push_back(lambda0 + radius * cplx(std::cos(th), std::sin(th)));
    }
    loop.push_back(lambda0);
    paths.push_back(std::move(loop));

    for (const auto& path : paths) {
        const auto trace = continue_cycle(fam, *ref, path, ctl, cfg);
        if (!trace.completed()) {
            out.stable = false;
            out.witness.kind = "trace";
            out.witness.trace_reason = trace.reason;
            out.witness.at_lambda = trace.at_lambda;
            return out;
        }
    }
    for (int sv = 0; sv < static_cast<int>(fam.singular_values.size()); ++sv) {
        const auto v = classify(fam, sv, lambda0, radius, cfg);
        if (v.kind != ActivityVerdict::Kind::Passive) {
            out.stable = false;
            out.witness.kind = "activity";
            out.witness.sv_index = sv;
            out.witness.verdict = v;
            return out;
        }
    }
    out.stable = true;
    return out;
}

}  // namespace biflab
