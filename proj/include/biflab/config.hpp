// Run-wide numeric policy. Serializes to a flat JSON object; unknown keys
// are rejected so configs cannot silently drift.

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "biflab/families.hpp"

namespace biflab {

struct RunConfig {
    double escape_radius = 1e12;
    double pole_tol = 1e-12;
    double cycle_tol = 1e-9;
    int max_iter = 1000;
    double diam_threshold = 0.5;
    double stability_margin = 1e-6;
    double collision_tol = 1e-6;
    int threads = 4;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (escape_radius <= 1.0) throw Error("escape_radius must exceed 1");
        if (pole_tol <= 0 || cycle_tol <= 0 || diam_threshold <= 0 || stability_margin <= 0 ||
            collision_tol <= 0)
            throw Error("tolerances must be positive");
        if (max_iter < 1) throw Error("max_iter must be positive");
        if (threads < 1) throw Error("threads must be positive");
    }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"escape_radius", c.escape_radius},
                       {"pole_tol", c.pole_tol},
                       {"cycle_tol", c.cycle_tol},
                       {"max_iter", c.max_iter},
                       {"diam_threshold", c.diam_threshold},
                       {"stability_margin", c.stability_margin},
                       {"collision_tol", c.collision_tol},
                       {"threads", c.threads},
                       {"rng_seed", c.rng_seed}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    static const char* known[] = {"escape_radius", "pole_tol",         "cycle_tol",
                                  "max_iter",      "diam_threshold",   "stability_margin",
                                  "collision_tol", "threads",          "rng_seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw Error("unknown config key: " + it.key());
    }
    c = RunConfig{};
    if (j.contains("escape_radius")) c.escape_radius = j.at("escape_radius").get<double>();
    if (j.contains("pole_tol")) c.pole_tol = j.at("pole_tol").get<double>();
    if (j.contains("cycle_tol")) c.cycle_tol = j.at("cycle_tol").get<double>();
    if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
    if (j.contains("diam_threshold")) c.diam_threshold = j.at("diam_threshold").get<double>();
    if (j.contains("stability_margin")) c.stability_margin = j.at("stability_margin").get<double>();
    if (j.contains("collision_tol")) c.collision_tol = j.at("collision_tol").get<double>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.validate();
}

// FNV-1a over the canonical JSON dump; stable across runs and builds.
inline std::string config_hash(const RunConfig& c) {
    const std::string dump = nlohmann::json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace biflab
