// Deterministic, data-parallel parameter-grid engine: fate/period/multiplier/
// activity maps over rectangular grids, P6 pixmap rendering with a JSON
// sidecar, and CSV/JSON export. Workers own disjoint row ranges of a
// pre-sized buffer; identical spec + config give bit-identical results at any
// thread count.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <thread>
#include <vector>

#include "biflab/activity.hpp"
#include "biflab/orbit.hpp"

namespace biflab {

inline const char* kVersionString = "biflab 0.1.0";

enum class ScanTask { FateMap, PeriodMap, MultiplierMap, ActivityMap };

inline std::string to_string(ScanTask t) {
    switch (t) {
        case ScanTask::FateMap: return "fate";
        case ScanTask::PeriodMap: return "period";
        case ScanTask::MultiplierMap: return "multiplier";
        case ScanTask::ActivityMap: return "activity";
    }
    return "?";
}

inline ScanTask scan_task_from_string(const std::string& s) {
    if (s == "fate") return ScanTask::FateMap;
    if (s == "period") return ScanTask::PeriodMap;
    if (s == "multiplier") return ScanTask::MultiplierMap;
    if (s == "activity") return ScanTask::ActivityMap;
    throw Error("unknown scan task: " + s);
}

struct GridSpec {
    cplx center{};
    double width = 4.0, height = 4.0;
    int nx = 64, ny = 64;
    ScanTask task = ScanTask::PeriodMap;
    RunConfig config;

    void validate() const {
        if (nx < 1 || ny < 1) throw Error("grid must be at least 1x1");
        if (width <= 0 || height <= 0) throw Error("grid extent must be positive");
        config.validate();
    }

    // cell centers, row-major; row 0 carries the smallest imaginary part
    cplx cell_lambda(int row, int col) const {
        const double re = center.real() - width / 2.0 + (col + 0.5) * width / nx;
        const double im = center.imag() - height / 2.0 + (row + 0.5) * height / ny;
        return cplx(re, im);
    }
};

struct GridCell {
    int code = 0;
    double value = 0.0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct GridResult {
    GridSpec spec;
    std::vector<GridCell> cells;  // row-major, nx*ny entries
    std::string family_id;
    int sv_index = 0;
    std::string config_hash;
    std::string version;
};

inline void to_json(nlohmann::json& j, const GridSpec& s) {
    j = nlohmann::json{{"center", s.center}, {"width", s.width},   {"height", s.height},
                       {"nx", s.nx},         {"ny", s.ny},         {"task", to_string(s.task)},
                       {"config", s.config}, {"cell_anchor", "center"}, {"row0", "min-imag"}};
}

inline void from_json(const nlohmann::json& j, GridSpec& s) {
    s.center = j.at("center").get<cplx>();
    s.width = j.at("width").get<double>();
    s.height = j.at("height").get<double>();
    s.nx = j.at("nx").get<int>();
    s.ny = j.at("ny").get<int>();
    s.task = scan_task_from_string(j.at("task").get<std::string>());
    s.config = j.at("config").get<RunConfig>();
}

inline void to_json(nlohmann::json& j, const GridResult& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) cells.push_back(nlohmann::json{{"code", c.code}, {"value", c.value}});
    j = nlohmann::json{{"spec", r.spec},
                       {"cells", std::move(cells)},
                       {"metadata",
                        {{"family", r.family_id},
                         {"sv", r.sv_index},
                         {"config_hash", r.config_hash},
                         {"version", r.version}}}};
}

inline void from_json(const nlohmann::json& j, GridResult& r) {
    r.spec = j.at("spec").get<GridSpec>();
    r.cells.clear();
    for (const auto& c : j.at("cells"))
        r.cells.push_back(GridCell{c.at("code").get<int>(), c.at("value").get<double>()});
    const auto& m = j.at("metadata");
    r.family_id = m.at("family").get<std::string>();
    r.sv_index = m.at("sv").get<int>();
    r.config_hash = m.at("config_hash").get<std::string>();
    r.version = m.at("version").get<std::string>();
}

namespace detail {

inline int fate_code(FateKind k) {
    switch (k) {
        case FateKind::Undecided: return 0;
        case FateKind::Truncated: return 1;
        case FateKind::Captured: return 2;
        case FateKind::Escaping: return 3;
    }
    return 0;
}

inline GridCell scan_cell(const FamilyDescriptor& fam, int sv_index, const GridSpec& spec,
                          cplx lambda) {
    const auto& cfg = spec.config;
    const auto& sv = fam.singular_values[sv_index];
    switch (spec.task) {
        case ScanTask::FateMap: {
            const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), cfg);
            return GridCell{fate_code(rec.fate.kind), static_cast<double>(rec.fate.step)};
        }
        case ScanTask::PeriodMap: {
            const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), cfg);
            if (rec.fate.kind == FateKind::Captured) {
                const auto& cyc = *rec.fate.cycle;
                const double m = cyc.multiplier.is_inf() ? 1.0 : std::abs(cyc.multiplier.value());
                return GridCell{cyc.period, m};
            }
            return GridCell{0, 1.0};
        }
        case ScanTask::MultiplierMap: {
            const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), cfg);
            if (rec.fate.kind == FateKind::Captured) {
                const auto& cyc = *rec.fate.cycle;
                const double m = cyc.multiplier.is_inf() ? 1.0 : std::abs(cyc.multiplier.value());
                return GridCell{cyc.period, m};
            }
            return GridCell{0, 1.0};
        }
        case ScanTask::ActivityMap: {
            const auto rec = iterate_orbit(fam, lambda, sv.value(lambda), cfg);
            const int period =
                rec.fate.kind == FateKind::Captured ? rec.fate.cycle->period : 0;
            return GridCell{period, activity_indicator(fam, sv_index, lambda, cfg)};
        }
    }
    return {};
}

}  // namespace detail

inline GridResult scan_grid(const FamilyDescriptor& fam, int sv_index, const GridSpec& spec) {
    spec.validate();
    if (sv_index < 0 || sv_index >= static_cast<int>(fam.singular_values.size()))
        throw Error("singular value index out of range");
    GridResult result;
    result.spec = spec;
    result.family_id = fam.id;
    result.sv_index = sv_index;
    result.config_hash = config_hash(spec.config);
    result.version = kVersionString;
    result.cells.assign(static_cast<size_t>(spec.nx) * spec.ny, GridCell{});

    const int workers = std::clamp(spec.config.threads, 1, spec.ny);
    auto run_rows = [&](int row_begin, int row_end) {
        for (int row = row_begin; row < row_end; ++row)
            for (int col = 0; col < spec.nx; ++col)
                result.cells[static_cast<size_t>(row) * spec.nx + col] =
                    detail::scan_cell(fam, sv_index, spec, spec.cell_lambda(row, col));
    };
    if (workers == 1) {
        run_rows(0, spec.ny);
    } else {
        // contiguous row chunks, disjoint slices of the pre-sized buffer
        std::vector<std::thread> pool;
        const int chunk = (spec.ny + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(spec.ny, lo + chunk);
            if (lo < hi) pool.emplace_back(run_rows, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    return result;
}

struct PeriodBoundReport {
    int max_period = 0;
    std::map<int, int> histogram;
    int undecided = 0;
};

inline void to_json(nlohmann::json& j, const PeriodBoundReport& r) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [p, c] : r.histogram) hist[std::to_string(p)] = c;
    j = nlohmann::json{
        {"max_period", r.max_period}, {"histogram", std::move(hist)}, {"undecided", r.undecided}};
}

// Aggregates a PeriodMap region: the numerical face of period boundedness on
// stable regions.
inline PeriodBoundReport period_bound_report(const FamilyDescriptor& fam, int sv_index,
                                             const GridSpec& region) {
    if (region.task != ScanTask::PeriodMap) throw Error("period report needs a period map");
    const auto result = scan_grid(fam, sv_index, region);
    PeriodBoundReport rep;
    for (const auto& c : result.cells) {
        if (c.code <= 0) {
            ++rep.undecided;
            continue;
        }
        rep.max_period = std::max(rep.max_period, c.code);
        ++rep.histogram[c.code];
    }
    return rep;
}

// --- rendering ---------------------------------------------------------

struct Rgb {
    unsigned char r = 0, g = 0, b = 0;
};

namespace detail {

inline Rgb hsv(double h, double s, double v) {
    h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
    const int i = static_cast<int>(h);
    const double f = h - i;
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double r = 0, g = 0, b = 0;
    switch (i % 6) {
        case 0: r = v, g = t, b = p; break;
        case 1: r = q, g = v, b = p; break;
        case 2: r = p, g = v, b = t; break;
        case 3: r = p, g = q, b = v; break;
        case 4: r = t, g = p, b = v; break;
        case 5: r = v, g = p, b = q; break;
    }
    auto byte = [](double x) { return static_cast<unsigned char>(std::lround(255.0 * x)); };
    return Rgb{byte(r), byte(g), byte(b)};
}

}  // namespace detail

// Period palette: code 0 (undecided) renders black; period p gets the hue
// 47*(p-1) degrees at s=0.85, v=0.95, so period 1 is rgb(242, 36, 36).
inline Rgb period_color(int code) {
    if (code <= 0) return Rgb{0, 0, 0};
    return detail::hsv(47.0 * (code - 1), 0.85, 0.95);
}

inline Rgb fate_color(int code) {
    switch (code) {
        case 1: return Rgb{230, 80, 30};    // truncated
        case 2: return Rgb{40, 90, 200};    // captured
        case 3: return Rgb{240, 240, 240};  // escaping
        default: return Rgb{0, 0, 0};       // undecided
    }
}

inline Rgb log_multiplier_color(double value) {
    const double m = std::clamp(value, 1e-16, 1.0);
    const double g = std::clamp(-std::log10(m) / 16.0, 0.0, 1.0);
    const auto byte = static_cast<unsigned char>(std::lround(255.0 * g));
    return Rgb{byte, byte, byte};
}

inline Rgb activity_color(double value) {
    const double v = std::clamp(value, 0.0, 1.0);
    return Rgb{static_cast<unsigned char>(std::lround(255.0 * v)),
               static_cast<unsigned char>(std::lround(200.0 * v)),
               static_cast<unsigned char>(std::lround(64.0 + 191.0 * v))};
}

inline Rgb palette_color(const std::string& palette, const GridCell& cell) {
    if (palette == "period") return period_color(cell.code);
    if (palette == "fate") return fate_color(cell.code);
    if (palette == "log-multiplier") return log_multiplier_color(cell.value);
    if (palette == "activity") return activity_color(cell.value);
    throw Error("unknown palette: " + palette);
}

// P6 header for the documented layout "P6\n{nx} {ny}\n255\n".
inline std::string pixmap_header(int nx, int ny) {
    return "P6\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
}

// Writes the binary pixmap plus a <out_path>.json sidecar carrying the spec
// and metadata. Byte-identical across runs for identical inputs.
inline void render(const GridResult& result, const std::string& palette,
                   const std::string& out_path) {
    std::string payload = pixmap_header(result.spec.nx, result.spec.ny);
    payload.reserve(payload.size() + result.cells.size() * 3);
    // image rows top-to-bottom: top row carries the largest imaginary part
    for (int row = result.spec.ny - 1; row >= 0; --row) {
        for (int col = 0; col < result.spec.nx; ++col) {
            const auto& cell = result.cells[static_cast<size_t>(row) * result.spec.nx + col];
            const Rgb c = palette_color(palette, cell);
            payload.push_back(static_cast<char>(c.r));
            payload.push_back(static_cast<char>(c.g));
            payload.push_back(static_cast<char>(c.b));
        }
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot write " + out_path);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error("write failed: " + out_path);

    nlohmann::json sidecar;
    sidecar["spec"] = result.spec;
    sidecar["metadata"] = {{"family", result.family_id},
                           {"sv", result.sv_index},
                           {"config_hash", result.config_hash},
                           {"version", result.version},
                           {"palette", palette},
                           {"pixel_row0", "max-imag"}};
    std::ofstream side(out_path + ".json");
    if (!side) throw Error("cannot write " + out_path + ".json");
    side << sidecar.dump(2) << "\n";
}

inline void export_grid(const GridResult& result, const std::string& format,
                        const std::string& out_path) {
    if (format == "json") {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write " + out_path);
        out << nlohmann::json(result).dump(2) << "\n";
        if (!out) throw Error("write failed: " + out_path);
        return;
    }
    if (format == "csv") {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write " + out_path);
        out << "re,im,code,value\n";
        char buf[128];
        for (int row = 0; row < result.spec.ny; ++row) {
            for (int col = 0; col < result.spec.nx; ++col) {
                const cplx lam = result.spec.cell_lambda(row, col);
                const auto& c = result.cells[static_cast<size_t>(row) * result.spec.nx + col];
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g\n", lam.real(), lam.imag(),
                              c.code, c.value);
                out << buf;
            }
        }
        if (!out) throw Error("write failed: " + out_path);
        return;
    }
    throw Error("unknown export format: " + format);
}

inline GridResult import_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    return j.get<GridResult>();
}

}  // namespace biflab
