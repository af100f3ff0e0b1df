// Command-line dispatch: families, orbit, classify, shoot, misiurewicz,
// virtual, continue, scan, verify. JSON results go to stdout or --out.
// Exit codes: 0 success, 1 domain errors, 2 usage errors.

#pragma once

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "biflab/selftest.hpp"

namespace biflab {

// argument/validation failures map to exit code 2
struct UsageError : Error {
    using Error::Error;
};

namespace cli {

inline cplx parse_complex(const std::string& s) {
    std::istringstream in(s);
    double re = 0, im = 0;
    char comma = 0;
    if (!(in >> re)) throw UsageError("expected complex as re,im: " + s);
    if (in >> comma) {
        if (comma != ',' || !(in >> im)) throw UsageError("expected complex as re,im: " + s);
    }
    return cplx(re, im);
}

inline std::vector<cplx> parse_path(const std::string& s) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(s);
    } catch (const std::exception&) {
        throw UsageError("path must be a JSON list of [re,im] waypoints");
    }
    std::vector<cplx> out;
    if (!j.is_array() || j.size() < 2) throw UsageError("path needs at least two waypoints");
    for (const auto& w : j) {
        if (w.is_array() && w.size() == 2) {
            out.emplace_back(w[0].get<double>(), w[1].get<double>());
        } else if (w.is_object()) {
            out.emplace_back(w.at("re").get<double>(), w.at("im").get<double>());
        } else {
            throw UsageError("waypoint must be [re,im]");
        }
    }
    return out;
}

inline FamilyDescriptor resolve_family(const std::string& id) {
    try {
        return builtin(id);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

inline void check_sv(const FamilyDescriptor& fam, int sv) {
    if (sv < 0 || sv >= static_cast<int>(fam.singular_values.size()))
        throw UsageError("singular value index out of range for " + fam.id);
}

inline RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
        return j.get<RunConfig>();
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad config: ") + e.what());
    }
}

inline bool detail_near_any(const std::vector<cplx>& set, cplx x, double tol = 1e-8) {
    for (const cplx s : set)
        if (std::abs(s - x) < tol) return true;
    return false;
}

inline void emit(const nlohmann::json& j, const std::string& out_path, std::ostream& os) {
    if (out_path.empty()) {
        os << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write " + out_path);
        out << j.dump(2) << "\n";
    }
}

}  // namespace cli

inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"parameter-plane stability engine for one-parameter families of "
                 "rational, entire and meromorphic maps"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_path, "write JSON result here instead of stdout");

    // families
    auto* families_cmd = app.add_subcommand("families", "list built-in families");
    bool families_list = false;
    families_cmd->add_subcommand("list", "print one JSON line per family")
        ->parse_complete_callback([&] { families_list = true; });

    // orbit
    auto* orbit_cmd = app.add_subcommand("orbit", "iterate a singular value orbit");
    std::string orbit_family, orbit_lambda;
    int orbit_sv = 0;
    orbit_cmd->add_option("--family", orbit_family)->required();
    orbit_cmd->add_option("--lambda", orbit_lambda)->required();
    orbit_cmd->add_option("--sv", orbit_sv);

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "passive/active verdict on a disk");
    std::string cls_family, cls_lambda0;
    int cls_sv = 0;
    double cls_radius = 0.02;
    classify_cmd->add_option("--family", cls_family)->required();
    classify_cmd->add_option("--lambda0", cls_lambda0)->required();
    classify_cmd->add_option("--sv", cls_sv);
    classify_cmd->add_option("--radius", cls_radius);

    // shoot
    auto* shoot_cmd = app.add_subcommand("shoot", "solve f^n(v(l)) = target for l");
    std::string sh_family, sh_seed, sh_target;
    int sh_sv = 0, sh_depth = 1;
    bool sh_pole = false;
    double sh_tol = 1e-10;
    shoot_cmd->add_option("--family", sh_family)->required();
    shoot_cmd->add_option("--seed", sh_seed)->required();
    shoot_cmd->add_option("--sv", sh_sv);
    shoot_cmd->add_option("--depth", sh_depth);
    shoot_cmd->add_option("--target", sh_target, "constant target as re,im");
    shoot_cmd->add_flag("--pole", sh_pole, "shoot onto the boundary (reciprocal chart)");
    shoot_cmd->add_option("--tol", sh_tol);

    // misiurewicz
    auto* misiu_cmd = app.add_subcommand("misiurewicz", "parameters with singular orbit on a repelling cycle");
    std::string mz_family, mz_lambda0;
    int mz_sv = 0, mz_n = 2, mz_period = 1;
    double mz_radius = 0.3;
    misiu_cmd->add_option("--family", mz_family)->required();
    misiu_cmd->add_option("--lambda0", mz_lambda0)->required();
    misiu_cmd->add_option("--sv", mz_sv);
    misiu_cmd->add_option("--n", mz_n, "orbit depth of the relation");
    misiu_cmd->add_option("--target-period", mz_period, "period of the repelling target cycle");
    misiu_cmd->add_option("--radius", mz_radius);

    // virtual
    auto* virtual_cmd = app.add_subcommand("virtual", "truncation parameters / simple virtual cycles");
    std::string vc_family, vc_lambda0, vc_depths = "1";
    int vc_sv = 0, vc_confirm = 0;
    double vc_radius = 0.5;
    virtual_cmd->add_option("--family", vc_family)->required();
    virtual_cmd->add_option("--lambda0", vc_lambda0)->required();
    virtual_cmd->add_option("--sv", vc_sv);
    virtual_cmd->add_option("--depths", vc_depths, "comma-separated orbit depths");
    virtual_cmd->add_option("--radius", vc_radius);
    virtual_cmd->add_option("--confirm", vc_confirm,
                            "verify attracting cycles near each record (k_max)");

    // continue
    auto* cont_cmd = app.add_subcommand("continue", "continue a repelling cycle along a path");
    std::string ct_family, ct_lambda0, ct_path;
    int ct_period = 1;
    cont_cmd->add_option("--family", ct_family)->required();
    cont_cmd->add_option("--lambda0", ct_lambda0)->required();
    cont_cmd->add_option("--period", ct_period);
    cont_cmd->add_option("--path", ct_path, "JSON list of [re,im] waypoints")->required();

    // scan
    auto* scan_cmd = app.add_subcommand("scan", "parameter-grid maps");
    std::string sc_family, sc_center = "0,0", sc_task = "period", sc_out, sc_export, sc_palette = "period";
    int sc_sv = 0, sc_nx = 64, sc_ny = 64, sc_threads = 0;
    double sc_width = 4.0, sc_height = 4.0;
    scan_cmd->add_option("--family", sc_family)->required();
    scan_cmd->add_option("--sv", sc_sv);
    scan_cmd->add_option("--center", sc_center);
    scan_cmd->add_option("--width", sc_width);
    scan_cmd->add_option("--height", sc_height);
    scan_cmd->add_option("--nx", sc_nx);
    scan_cmd->add_option("--ny", sc_ny);
    scan_cmd->add_option("--task", sc_task, "fate | period | multiplier | activity");
    scan_cmd->add_option("--out", sc_out, "P6 pixmap path (sidecar JSON alongside)");
    scan_cmd->add_option("--export", sc_export, "export path, format by .json/.csv extension");
    scan_cmd->add_option("--palette", sc_palette, "period | fate | log-multiplier | activity");
    scan_cmd->add_option("--threads", sc_threads, "override config thread count");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the built-in verification suite");
    std::string vf_suite;
    verify_cmd->add_option("--suite", vf_suite, "only criteria whose name contains this");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends
            return app.exit(e, out, err);
        }
        app.exit(e, out, err);
        return 2;
    }

    try {
        const RunConfig cfg = cli::load_config(config_path);

        if (families_cmd->parsed()) {
            if (!families_list) throw UsageError("usage: families list");
            for (const auto& id : builtin_ids()) {
                const auto fam = builtin(id);
                nlohmann::json svs = nlohmann::json::array();
                for (const auto& sv : fam.singular_values)
                    svs.push_back({{"label", sv.label},
                                   {"kind", sv.kind == SingularValue::Kind::Critical
                                                ? "critical"
                                                : "asymptotic"}});
                const nlohmann::json line{{"id", id},
                                          {"singular_values", svs},
                                          {"exceptional_class",
                                           to_string(classify_exceptional(fam))}};
                out << line.dump() << "\n";
            }
            return 0;
        }

        if (orbit_cmd->parsed()) {
            const auto fam = cli::resolve_family(orbit_family);
            cli::check_sv(fam, orbit_sv);
            const cplx lam = cli::parse_complex(orbit_lambda);
            const auto rec =
                iterate_orbit(fam, lam, fam.singular_values[orbit_sv].value(lam), cfg);
            cli::emit(rec, out_path, out);
            return 0;
        }

        if (classify_cmd->parsed()) {
            const auto fam = cli::resolve_family(cls_family);
            cli::check_sv(fam, cls_sv);
            if (cls_radius <= 0) throw UsageError("radius must be positive");
            const auto verdict =
                classify(fam, cls_sv, cli::parse_complex(cls_lambda0), cls_radius, cfg);
            cli::emit(verdict, out_path, out);
            return 0;
        }

        if (shoot_cmd->parsed()) {
            const auto fam = cli::resolve_family(sh_family);
            cli::check_sv(fam, sh_sv);
            if (!sh_pole && sh_target.empty())
                throw UsageError("need --target or --pole");
            ShootingProblem prob;
            prob.fam = &fam;
            prob.sv_index = sh_sv;
            prob.depth = sh_depth;
            prob.pole_target = sh_pole;
            prob.seed = cli::parse_complex(sh_seed);
            prob.tol = sh_tol;
            if (!sh_pole) {
                const cplx t = cli::parse_complex(sh_target);
                prob.target = [t](cplx) { return SpherePoint::finite(t); };
            }
            nlohmann::json results = nlohmann::json::array();
            if (const auto res = shoot(prob, 60, cfg)) {
                results.push_back({{"lambda_star", res->lambda_star},
                                   {"residual", res->residual}});
            }
            cli::emit(results, out_path, out);
            return 0;
        }

        if (misiu_cmd->parsed()) {
            const auto fam = cli::resolve_family(mz_family);
            cli::check_sv(fam, mz_sv);
            const cplx lam0 = cli::parse_complex(mz_lambda0);
            // every distinct repelling cycle of the requested period serves
            // as a shooting target; merge the solutions
            std::vector<CycleRecord> targets;
            for (const auto& seed : detail::reference_seeds()) {
                const auto c = find_cycle_newton(fam, lam0, mz_period, seed, cfg);
                if (!c || c->stability != Stability::Repelling) continue;
                bool dup = false;
                for (const auto& t : targets)
                    dup = dup || chordal_distance(t.points[0], c->points[0]) < 1e-8 ||
                          chordal_distance(t.points[0], c->points.back()) < 1e-8;
                if (!dup) targets.push_back(*c);
            }
            if (targets.empty()) throw Error("no repelling target cycle of the requested period");
            std::vector<cplx> merged;
            for (const auto& target : targets) {
                for (const cplx lam : find_misiurewicz(fam, mz_sv, lam0, mz_n, target, mz_radius, cfg))
                    if (!cli::detail_near_any(merged, lam)) merged.push_back(lam);
            }
            nlohmann::json results = nlohmann::json::array();
            for (const cplx lam : merged) results.push_back(lam);
            cli::emit(results, out_path, out);
            return 0;
        }

        if (virtual_cmd->parsed()) {
            const auto fam = cli::resolve_family(vc_family);
            cli::check_sv(fam, vc_sv);
            std::vector<int> depths;
            std::istringstream ds(vc_depths);
            std::string tok;
            while (std::getline(ds, tok, ','))
                if (!tok.empty()) depths.push_back(std::stoi(tok));
            if (depths.empty()) throw UsageError("need at least one depth");
            const auto recs = find_truncation_parameters(
                fam, vc_sv, cli::parse_complex(vc_lambda0), depths, vc_radius, cfg);
            nlohmann::json results = nlohmann::json::array();
            for (const auto& r : recs) {
                nlohmann::json jr = r;
                if (vc_confirm > 0) {
                    jr["confirmation"] = verify_attracting_near_virtual(fam, r, vc_confirm, cfg);
                }
                results.push_back(std::move(jr));
            }
            cli::emit(results, out_path, out);
            return 0;
        }

        if (cont_cmd->parsed()) {
            const auto fam = cli::resolve_family(ct_family);
            const cplx lam0 = cli::parse_complex(ct_lambda0);
            auto path = cli::parse_path(ct_path);
            if (std::abs(path.front() - lam0) > 1e-12)
                throw UsageError("path must start at lambda0");
            std::optional<CycleRecord> cycle;
            for (const auto& seed : detail::reference_seeds()) {
                const auto c = find_cycle_newton(fam, lam0, ct_period, seed, cfg);
                if (c && c->stability == Stability::Repelling) {
                    cycle = c;
                    break;
                }
            }
            if (!cycle) throw Error("no repelling cycle of the requested period at lambda0");
            const auto trace = continue_cycle(fam, *cycle, path, StepControl{}, cfg);
            cli::emit(trace, out_path, out);
            return 0;
        }

        if (scan_cmd->parsed()) {
            const auto fam = cli::resolve_family(sc_family);
            cli::check_sv(fam, sc_sv);
            GridSpec spec;
            spec.center = cli::parse_complex(sc_center);
            spec.width = sc_width;
            spec.height = sc_height;
            spec.nx = sc_nx;
            spec.ny = sc_ny;
            try {
                spec.task = scan_task_from_string(sc_task);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            spec.config = cfg;
            if (sc_threads > 0) spec.config.threads = sc_threads;
            try {
                spec.validate();
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            const auto result = scan_grid(fam, sc_sv, spec);
            if (!sc_out.empty()) render(result, sc_palette, sc_out);
            if (!sc_export.empty()) {
                const auto dot = sc_export.rfind('.');
                const std::string ext = dot == std::string::npos ? "" : sc_export.substr(dot + 1);
                if (ext != "json" && ext != "csv")
                    throw UsageError("export path needs a .json or .csv extension");
                export_grid(result, ext, sc_export);
            }
            if (sc_out.empty() && sc_export.empty()) cli::emit(result, out_path, out);
            return 0;
        }

        if (verify_cmd->parsed()) {
            const auto results = run_verification(vf_suite);
            if (results.empty()) throw UsageError("no criteria match --suite " + vf_suite);
            const bool ok = print_verification(results, out);
            return ok ? 0 : 1;
        }

        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace biflab
