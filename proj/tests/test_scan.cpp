#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "biflab/scan.hpp"

using namespace biflab;
using Catch::Approx;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

GridSpec standard_window(ScanTask task, int nx = 64, int ny = 64) {
    GridSpec spec;
    spec.center = cplx(-0.5, 0.0);
    spec.width = 4.0;
    spec.height = 4.0;
    spec.nx = nx;
    spec.ny = ny;
    spec.task = task;
    return spec;
}

const GridCell& cell_at(const GridResult& r, cplx lambda) {
    const auto& s = r.spec;
    const int col = static_cast<int>((lambda.real() - (s.center.real() - s.width / 2)) / s.width * s.nx);
    const int row = static_cast<int>((lambda.imag() - (s.center.imag() - s.height / 2)) / s.height * s.ny);
    REQUIRE(col >= 0);
    REQUIRE(col < s.nx);
    REQUIRE(row >= 0);
    REQUIRE(row < s.ny);
    return r.cells[static_cast<size_t>(row) * s.nx + col];
}

}  // namespace

TEST_CASE("period map over the standard quadratic window") {
    const auto fam = builtin("quadratic");
    const auto result = scan_grid(fam, 0, standard_window(ScanTask::PeriodMap));
    // oracle: direct orbit iteration at the two cell centers
    CHECK(cell_at(result, cplx(0, 0)).code == 1);
    CHECK(cell_at(result, cplx(-1, 0)).code == 2);
}

TEST_CASE("exterior cells capture at infinity with period 1") {
    const auto fam = builtin("quadratic");
    GridSpec spec;
    spec.center = cplx(2.0, 0.0);
    spec.width = 0.1;
    spec.height = 0.1;
    spec.nx = 3;
    spec.ny = 3;
    spec.task = ScanTask::PeriodMap;
    const auto result = scan_grid(fam, 0, spec);
    for (const auto& c : result.cells) {
        CHECK(c.code == 1);
        CHECK(c.value < 1e-9);  // superattracting at infinity
    }
}

TEST_CASE("1x1 multiplier map at the superattracting center") {
    const auto fam = builtin("quadratic");
    GridSpec spec;
    spec.center = cplx(0, 0);
    spec.width = 1e-9;
    spec.height = 1e-9;
    spec.nx = 1;
    spec.ny = 1;
    spec.task = ScanTask::MultiplierMap;
    const auto result = scan_grid(fam, 0, spec);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].code == 1);
    CHECK(result.cells[0].value == 0.0);
}

TEST_CASE("period bound reports") {
    const auto fam = builtin("quadratic");
    SECTION("main cardioid box: all period 1, nothing undecided") {
        GridSpec spec;
        spec.center = cplx(0, 0);
        spec.width = 0.4;
        spec.height = 0.4;
        spec.nx = 32;
        spec.ny = 32;
        spec.task = ScanTask::PeriodMap;
        const auto rep = period_bound_report(fam, 0, spec);
        CHECK(rep.max_period == 1);
        CHECK(rep.undecided == 0);
    }
    SECTION("period-2 disk box") {
        GridSpec spec;
        spec.center = cplx(-1, 0);
        spec.width = 0.2;
        spec.height = 0.2;
        spec.nx = 32;
        spec.ny = 32;
        spec.task = ScanTask::PeriodMap;
        const auto rep = period_bound_report(fam, 0, spec);
        CHECK(rep.max_period == 2);
    }
    SECTION("period-doubling cascade region reaches period >= 4") {
        // oracle: the orbit at lambda=-1.3 settles on a period-4 cycle
        const auto rec = iterate_orbit(fam, cplx(-1.3, 0), SpherePoint::finite(-1.3), RunConfig{});
        REQUIRE(rec.fate.kind == FateKind::Captured);
        REQUIRE(rec.fate.cycle->period == 4);
        GridSpec spec;
        spec.center = cplx(-1.4, 0);
        spec.width = 0.2;
        spec.height = 0.2;
        spec.nx = 64;
        spec.ny = 64;
        spec.task = ScanTask::PeriodMap;
        const auto rep = period_bound_report(fam, 0, spec);
        CHECK(rep.max_period >= 4);
    }
}

TEST_CASE("determinism and parallel/serial equivalence") {
    const auto fam = builtin("quadratic");
    auto spec = standard_window(ScanTask::PeriodMap, 32, 32);
    spec.config.threads = 8;
    const auto a = scan_grid(fam, 0, spec);
    const auto b = scan_grid(fam, 0, spec);
    REQUIRE(a.cells.size() == b.cells.size());
    CHECK(a.cells == b.cells);
    auto serial = spec;
    serial.config.threads = 1;
    const auto c = scan_grid(fam, 0, serial);
    CHECK(a.cells == c.cells);
}

TEST_CASE("resolution refinement: same centers, same decided codes") {
    const auto fam = builtin("quadratic");
    GridSpec coarse;
    coarse.center = cplx(-0.5, 0.0);
    coarse.width = 2.0;
    coarse.height = 2.0;
    coarse.nx = 8;
    coarse.ny = 8;
    coarse.task = ScanTask::PeriodMap;
    const auto a = scan_grid(fam, 0, coarse);
    // doubling resolution and extent together reproduces the original cell
    // centers exactly at the same cell size
    GridSpec fine = coarse;
    fine.nx = 16;
    fine.ny = 16;
    fine.width = 4.0;
    fine.height = 4.0;
    fine.center = coarse.center + cplx(1.0, 1.0);  // align lower-left corners
    const auto b = scan_grid(fam, 0, fine);
    for (int row = 0; row < coarse.ny; ++row) {
        for (int col = 0; col < coarse.nx; ++col) {
            const cplx lam = coarse.cell_lambda(row, col);
            REQUIRE(fine.cell_lambda(row, col) == lam);
            const auto& ca = a.cells[static_cast<size_t>(row) * coarse.nx + col];
            const auto& cb = b.cells[static_cast<size_t>(row) * fine.nx + col];
            if (ca.code > 0) CHECK(ca.code == cb.code);
        }
    }
    // per-cell purity: 1x1 probes at coarse centers reproduce the cells
    for (int k = 0; k < 5; ++k) {
        const int row = (k * 3) % coarse.ny, col = (k * 5) % coarse.nx;
        GridSpec probe = coarse;
        probe.nx = probe.ny = 1;
        probe.width = coarse.width / coarse.nx;
        probe.height = coarse.height / coarse.ny;
        probe.center = coarse.cell_lambda(row, col);
        const auto p = scan_grid(fam, 0, probe);
        CHECK(p.cells[0] == a.cells[static_cast<size_t>(row) * coarse.nx + col]);
    }
}

TEST_CASE("render: header arithmetic, documented colors, determinism") {
    const auto fam = builtin("quadratic");
    const auto tmp = std::filesystem::temp_directory_path();
    SECTION("single superattracting pixel") {
        GridSpec spec;
        spec.center = cplx(0, 0);
        spec.width = spec.height = 1e-9;
        spec.nx = spec.ny = 1;
        spec.task = ScanTask::PeriodMap;
        const auto result = scan_grid(fam, 0, spec);
        const auto path = (tmp / "biflab_1x1.ppm").string();
        render(result, "period", path);
        const std::string bytes = slurp(path);
        const std::string header = pixmap_header(1, 1);
        REQUIRE(bytes.size() == header.size() + 3);
        CHECK(bytes.substr(0, header.size()) == header);
        // documented period-1 color
        CHECK(static_cast<unsigned char>(bytes[header.size() + 0]) == 242);
        CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 36);
        CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 36);
        // sidecar exists and carries the spec
        const auto sidecar = nlohmann::json::parse(slurp(path + ".json"));
        CHECK(sidecar.at("spec").at("nx") == 1);
        CHECK(sidecar.at("metadata").at("palette") == "period");
    }
    SECTION("64x64 payload size and byte identity") {
        const auto result = scan_grid(fam, 0, standard_window(ScanTask::PeriodMap));
        const auto p1 = (tmp / "biflab_a.ppm").string();
        const auto p2 = (tmp / "biflab_b.ppm").string();
        render(result, "period", p1);
        render(result, "period", p2);
        const std::string a = slurp(p1), b = slurp(p2);
        CHECK(a.size() == pixmap_header(64, 64).size() + 64 * 64 * 3);
        CHECK(a == b);
    }
}

TEST_CASE("export and import") {
    const auto fam = builtin("quadratic");
    const auto tmp = std::filesystem::temp_directory_path();
    GridSpec spec;
    spec.center = cplx(-1, 0);
    spec.width = spec.height = 0.5;
    spec.nx = spec.ny = 2;
    spec.task = ScanTask::PeriodMap;
    const auto result = scan_grid(fam, 0, spec);
    SECTION("json round trip reproduces cells exactly") {
        const auto path = (tmp / "biflab_grid.json").string();
        export_grid(result, "json", path);
        const auto back = import_grid(path);
        CHECK(back.cells == result.cells);
        CHECK(back.family_id == result.family_id);
        CHECK(back.config_hash == result.config_hash);
        CHECK(back.spec.nx == result.spec.nx);
    }
    SECTION("csv rows in row-major order") {
        const auto path = (tmp / "biflab_grid.csv").string();
        export_grid(result, "csv", path);
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "re,im,code,value");
        int rows = 0;
        std::vector<std::string> lines;
        while (std::getline(in, line)) {
            if (!line.empty()) lines.push_back(line), ++rows;
        }
        CHECK(rows == 4);
        // first row is the cell with smallest imaginary part, smallest real part
        const cplx first = spec.cell_lambda(0, 0);
        char expect[64];
        std::snprintf(expect, sizeof expect, "%.17g,%.17g", first.real(), first.imag());
        CHECK(lines[0].rfind(expect, 0) == 0);
    }
    SECTION("1x1 grid exports a single row") {
        GridSpec one = spec;
        one.nx = one.ny = 1;
        const auto r = scan_grid(fam, 0, one);
        const auto path = (tmp / "biflab_one.csv").string();
        export_grid(r, "csv", path);
        std::ifstream in(path);
        std::string line;
        int count = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++count;
        CHECK(count == 2);  // header + 1 row
    }
}

TEST_CASE("period coherence: uniform 3x3 blocks have indicator 0 at the center") {
    const auto fam = builtin("quadratic");
    const auto result = scan_grid(fam, 0, standard_window(ScanTask::PeriodMap));
    const auto& s = result.spec;
    int blocks = 0, violations = 0;
    for (int row = 1; row + 1 < s.ny; ++row) {
        for (int col = 1; col + 1 < s.nx; ++col) {
            const int p = result.cells[static_cast<size_t>(row) * s.nx + col].code;
            if (p <= 0) continue;
            bool uniform = true;
            for (int dr = -1; dr <= 1 && uniform; ++dr)
                for (int dc = -1; dc <= 1 && uniform; ++dc)
                    uniform = result.cells[static_cast<size_t>(row + dr) * s.nx + (col + dc)].code == p;
            if (!uniform) continue;
            ++blocks;
            const double ind = activity_indicator(fam, 0, s.cell_lambda(row, col), s.config);
            violations += ind != 0.0;
        }
    }
    INFO("uniform blocks: " << blocks);
    CHECK(blocks > 100);
    CHECK(violations == 0);
}
