#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "pic/config.hpp"
#include "pic/deposit.hpp"
#include "pic/report.hpp"
#include "pic/simulation.hpp"

using namespace pic;

namespace {

GridSpec cube(int n) {
    GridSpec g;
    g.nx = g.ny = g.nz = n;
    return g;
}

// Max per-node deviation normalized by the component's peak magnitude;
// summation reordering leaves garbage relative error at nodes that cancel to
// nearly zero, so the peak is the meaningful scale.
double grid_max_rel_err(const CurrentGrid& got, const CurrentGrid& want) {
    double err = 0.0;
    for (int c = 0; c < 3; ++c) {
        double peak = 0.0;
        for (double v : want.component(c)) peak = std::max(peak, std::abs(v));
        for (std::size_t i = 0; i < want.component(c).size(); ++i) {
            const double d = std::abs(got.component(c)[i] - want.component(c)[i]);
            if (d == 0.0) continue;
            if (peak == 0.0) return std::numeric_limits<double>::infinity();
            err = std::max(err, d / peak);
        }
    }
    return err;
}

WorkloadConfig drift_cfg(int n, int ppc, std::uint64_t seed, ShapeOrder order) {
    WorkloadConfig cfg;
    cfg.grid = cube(n);
    cfg.ppc = ppc;
    cfg.kind = WorkloadKind::drift_gradient;
    cfg.seed = seed;
    cfg.order = order;
    return cfg;
}

// strips the wall-clock columns (wall/preproc/compute/sort/reduce/pps),
// keeping step, fraction_moved, rebuilds, global_sort_reason
std::string strip_timing_columns(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::string tok;
        std::istringstream ls(line);
        while (std::getline(ls, tok, ',')) cols.push_back(tok);
        if (cols.size() >= 10)
            out += cols[0] + ',' + cols[7] + ',' + cols[8] + ',' + cols[9] + '\n';
    }
    return out;
}

} // namespace

TEST_CASE("scalar kernel: empty set, on-node delta, qsp node coverage") {
    const GridSpec g = cube(4);
    ParticleSoA none;
    const CurrentGrid zero = deposit_scalar(none, g, ShapeOrder::cic);
    for (double v : zero.jx) CHECK(v == 0.0);

    ParticleSoA one;
    one.resize(1);
    one.q = 2.0;
    one.x[0] = 1.0; one.y[0] = 2.0; one.z[0] = 3.0; // exactly on a node
    one.vx[0] = 0.5; one.vy[0] = -1.0; one.vz[0] = 0.25;
    one.w[0] = 3.0;
    one.id[0] = 0;
    const CurrentGrid delta = deposit_scalar(one, g, ShapeOrder::cic);
    const std::uint32_t node = g.linear_id(1, 2, 3);
    CHECK(delta.jx[node] == doctest::Approx(2.0 * 0.5 * 3.0).epsilon(1e-15));
    CHECK(delta.jy[node] == doctest::Approx(-2.0 * 3.0).epsilon(1e-15));
    int touched = 0;
    for (double v : delta.jx)
        if (v != 0.0) ++touched;
    CHECK(touched == 1);

    // generic interior position: the third-order stencil writes 64 nodes
    one.x[0] = 1.3; one.y[0] = 2.3; one.z[0] = 3.3;
    const CurrentGrid q = deposit_scalar(one, g, ShapeOrder::qsp);
    int nodes = 0;
    for (double v : q.jx)
        if (v != 0.0) ++nodes;
    CHECK(nodes == 64);
    const auto sums = q.component_sums();
    CHECK(sums[0] == doctest::Approx(2.0 * 0.5 * 3.0).epsilon(1e-13));
    CHECK(sums[1] == doctest::Approx(-2.0 * 3.0).epsilon(1e-13));
    CHECK(sums[2] == doctest::Approx(2.0 * 0.25 * 3.0).epsilon(1e-13));
}

TEST_CASE("empty particle sets yield zero grids in every kernel") {
    const GridSpec g = cube(4);
    ParticleSoA none;
    for (const CurrentGrid& grid :
         {deposit_rhocell_vector(none, g, ShapeOrder::cic), deposit_tiled(none, g, ShapeOrder::qsp),
          deposit_scalar(none, g, ShapeOrder::qsp)}) {
        for (int c = 0; c < 3; ++c)
            for (double v : grid.component(c)) CHECK(v == 0.0);
    }
}

TEST_CASE("every kernel agrees with the scalar reference") {
    for (ShapeOrder order : {ShapeOrder::cic, ShapeOrder::qsp}) {
        WorkloadConfig cfg = drift_cfg(5, 6, 77, order);
        ParticleSoA soa = make_workload(cfg);
        advance(soa, cfg.dt, cfg.grid);
        const CurrentGrid want = deposit_scalar(soa, cfg.grid, order);

        // storage-order kernels
        {
            const CurrentGrid rho = deposit_rhocell_vector(soa, cfg.grid, order);
            CHECK(grid_max_rel_err(rho, want) < 1e-13);
            TiledOptions flush;
            flush.gpma = nullptr;
            flush.residency = false;
            CHECK(grid_max_rel_err(deposit_tiled(soa, cfg.grid, order, flush), want) < 1e-13);
            TiledOptions runs;
            runs.residency = true;
            CHECK(grid_max_rel_err(deposit_tiled(soa, cfg.grid, order, runs), want) < 1e-13);
        }

        // bin-ordered kernels on a sorted copy
        {
            ParticleSoA sorted = soa;
            Gpma gpma = gpma_build(sorted, cfg.grid, {});
            const CurrentGrid w2 = deposit_scalar(sorted, cfg.grid, order);
            CHECK(grid_max_rel_err(w2, want) < 1e-13); // permutation invariance
            CHECK(grid_max_rel_err(deposit_scalar(sorted, cfg.grid, order, &gpma), want) < 1e-13);
            CHECK(grid_max_rel_err(deposit_rhocell_vector(sorted, cfg.grid, order, &gpma), want) <
                  1e-13);
            TiledOptions opt;
            opt.gpma = &gpma;
            CHECK(grid_max_rel_err(deposit_tiled(sorted, cfg.grid, order, opt), want) < 1e-13);
        }
    }
}

TEST_CASE("conservation: grid sums equal the particle totals") {
    for (ShapeOrder order : {ShapeOrder::cic, ShapeOrder::qsp}) {
        WorkloadConfig cfg = drift_cfg(6, 8, 5, order);
        cfg.charge = -1.5;
        ParticleSoA soa = make_workload(cfg);
        const CurrentGrid grid = deposit_scalar(soa, cfg.grid, order);
        const auto sums = grid.component_sums();
        for (int c = 0; c < 3; ++c) {
            double want = 0.0, scale = 0.0;
            for (std::size_t p = 0; p < soa.size(); ++p) {
                const auto wq = particle_weights(soa, p);
                want += wq[c];
                scale += std::abs(wq[c]);
            }
            CHECK(std::abs(sums[c] - want) <= 1e-12 * std::max(std::abs(want), scale));
        }
    }
}

TEST_CASE("tile residency: 6 particles in one cell = 3 mopa per component, one extract pass") {
    GridSpec g = cube(4);
    ParticleSoA soa;
    soa.resize(6);
    for (int p = 0; p < 6; ++p) {
        soa.x[p] = 1.2 + 0.1 * p;
        soa.y[p] = 1.4;
        soa.z[p] = 1.6;
        soa.vx[p] = 0.1; soa.vy[p] = 0.2; soa.vz[p] = 0.3;
        soa.w[p] = 1.0;
        soa.id[p] = static_cast<std::uint64_t>(p);
    }
    Gpma gpma = gpma_build(soa, g, {});
    KernelCounters counters;
    TiledOptions opt;
    opt.gpma = &gpma;
    opt.counters = &counters;
    const CurrentGrid got = deposit_tiled(soa, g, ShapeOrder::cic, opt);
    CHECK(counters.mopa_calls == 9);      // ceil(6/2) pairs x 3 components
    CHECK(counters.extract_passes == 3);  // one tile readout per component
    CHECK(grid_max_rel_err(got, deposit_scalar(soa, g, ShapeOrder::cic)) < 1e-13);

    // without residency each pair flushes its own tile
    KernelCounters flush_counters;
    TiledOptions flush;
    flush.gpma = &gpma;
    flush.residency = false;
    flush.counters = &flush_counters;
    deposit_tiled(soa, g, ShapeOrder::cic, flush);
    CHECK(flush_counters.mopa_calls == 9);
    CHECK(flush_counters.extract_passes == 9);
}

TEST_CASE("dual-tile unrolling is numerically identical to single-tile") {
    WorkloadConfig cfg = drift_cfg(6, 16, 31, ShapeOrder::cic);
    ParticleSoA soa = make_workload(cfg);
    Gpma gpma = gpma_build(soa, cfg.grid, {});
    TiledOptions single;
    single.gpma = &gpma;
    TiledOptions dual = single;
    dual.dual_tile = true;
    const CurrentGrid a = deposit_tiled(soa, cfg.grid, ShapeOrder::cic, single);
    const CurrentGrid b = deposit_tiled(soa, cfg.grid, ShapeOrder::cic, dual);
    CHECK(grid_max_rel_err(b, a) < 1e-13);
}

TEST_CASE("ghost padding neutrality: zero-weight tail particles change nothing") {
    WorkloadConfig cfg = drift_cfg(4, 3, 19, ShapeOrder::cic); // odd ppc exercises ghosts
    ParticleSoA soa = make_workload(cfg);
    const CurrentGrid base = deposit_tiled(soa, cfg.grid, ShapeOrder::cic);

    ParticleSoA padded = soa;
    const std::size_t n = padded.size();
    padded.resize(n + 5);
    for (std::size_t p = n; p < padded.size(); ++p) {
        padded.x[p] = 0.5; padded.y[p] = 0.5; padded.z[p] = 0.5;
        padded.w[p] = 0.0;
        padded.id[p] = 1000000 + p;
    }
    const CurrentGrid with_ghosts = deposit_tiled(padded, cfg.grid, ShapeOrder::cic);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < base.component(c).size(); ++i)
            CHECK(with_ghosts.component(c)[i] == base.component(c)[i]);
}

TEST_CASE("generic deposition: a one-component quantity behaves like current with v=1") {
    WorkloadConfig cfg = drift_cfg(5, 4, 9, ShapeOrder::cic);
    ParticleSoA soa = make_workload(cfg);
    std::vector<double> charge(soa.size());
    double total = 0.0;
    for (std::size_t p = 0; p < soa.size(); ++p) {
        charge[p] = soa.q * soa.w[p];
        total += charge[p];
    }
    const auto rho = deposit_density(soa, cfg.grid, ShapeOrder::cic, charge);
    double sum = 0.0;
    for (double v : rho) sum += v;
    CHECK(sum == doctest::Approx(total).epsilon(1e-12));

    // against the current kernel with unit velocities
    ParticleSoA unit = soa;
    for (std::size_t p = 0; p < unit.size(); ++p) {
        unit.vx[p] = 1.0; unit.vy[p] = 1.0; unit.vz[p] = 1.0;
    }
    const CurrentGrid j = deposit_scalar(unit, cfg.grid, ShapeOrder::cic);
    for (std::size_t i = 0; i < rho.size(); ++i)
        CHECK(rho[i] == doctest::Approx(j.jx[i]).epsilon(1e-13));
}

TEST_CASE("run_simulation: interval-driven sorts and mode-checksum agreement") {
    WorkloadConfig cfg;
    cfg.grid = cube(6);
    cfg.ppc = 4;
    cfg.kind = WorkloadKind::uniform_plasma;
    cfg.seed = 3;
    cfg.steps = 100;
    SortPolicy policy;
    policy.perf_enable = false; // wall-clock dependent, nondeterministic at this scale

    const RunResult full = run_simulation(cfg, AblationMode::fullopt, policy);
    REQUIRE(full.steps.size() == 100);
    for (const auto& m : full.steps) {
        if (m.step == 49 || m.step == 99)
            CHECK(m.global_sort == SortReason::interval);
        else
            CHECK(m.global_sort == SortReason::none);
    }

    const RunResult base = run_simulation(cfg, AblationMode::baseline, policy);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(full.checksum[c] - base.checksum[c]) <=
              1e-12 * std::max(1.0, std::abs(base.checksum[c])));
    CHECK(grid_max_rel_err(full.final_grid, base.final_grid) < 1e-13);
}

TEST_CASE("run_simulation: a frozen population never sorts or rebuilds") {
    WorkloadConfig cfg;
    cfg.grid = cube(4);
    cfg.ppc = 2;
    cfg.thermal_speed = 0.0;
    cfg.steps = 60;
    SortPolicy policy;
    policy.perf_enable = false;
    const RunResult r = run_simulation(cfg, AblationMode::fullopt, policy);
    for (const auto& m : r.steps) {
        CHECK(m.fraction_moved == 0.0);
        CHECK(m.rebuilds == 0);
        if (m.step < 49) CHECK(m.global_sort == SortReason::none);
    }
    CHECK(r.steps[49].global_sort == SortReason::interval);
}

TEST_CASE("deposition is invariant under a global sort") {
    WorkloadConfig cfg = drift_cfg(6, 8, 21, ShapeOrder::cic);
    ParticleSoA soa = make_workload(cfg);
    for (int s = 0; s < 7; ++s) advance(soa, cfg.dt, cfg.grid);
    const CurrentGrid before = deposit_scalar(soa, cfg.grid, cfg.order);
    Gpma gpma = gpma_build(soa, cfg.grid, {});
    const CurrentGrid after = deposit_scalar(soa, cfg.grid, cfg.order);
    CHECK(grid_max_rel_err(after, before) < 1e-13);
}

TEST_CASE("csv report: schema, summary totals, determinism modulo timing") {
    CHECK(report_csv({}) == std::string(kCsvHeader) + "\n");

    WorkloadConfig cfg;
    cfg.grid = cube(6);
    cfg.ppc = 4;
    cfg.kind = WorkloadKind::drift_gradient;
    cfg.seed = 14;
    cfg.steps = 15;
    SortPolicy policy;
    policy.perf_enable = false;

    const RunResult a = run_simulation(cfg, AblationMode::fullopt, policy);
    const RunResult b = run_simulation(cfg, AblationMode::fullopt, policy);
    const std::string csv_a = report_csv(a.steps);
    const std::string csv_b = report_csv(b.steps);
    CHECK(strip_timing_columns(csv_a) == strip_timing_columns(csv_b));
    for (int c = 0; c < 3; ++c) CHECK(a.checksum[c] == b.checksum[c]); // bitwise

    // stage times are nested inside the step's wall time
    for (const auto& m : a.steps)
        CHECK(m.preproc_s + m.compute_s + m.sort_s + m.reduce_s <= m.wall_s);

    // summary row: totals of the per-step columns
    std::istringstream in(csv_a);
    std::string line, last;
    int rows = 0;
    while (std::getline(in, line)) {
        last = line;
        ++rows;
    }
    CHECK(rows == 1 + 15 + 1);
    CHECK(last.substr(0, 8) == "summary,");
    double wall_total = 0.0;
    for (const auto& m : a.steps) wall_total += m.wall_s;
    std::istringstream ls(last);
    std::string tok;
    std::getline(ls, tok, ',');
    std::getline(ls, tok, ',');
    CHECK(std::stod(tok) == doctest::Approx(wall_total).epsilon(1e-12));
}

TEST_CASE("json report mirrors the csv schema and round-trips") {
    WorkloadConfig cfg;
    cfg.grid = cube(4);
    cfg.ppc = 2;
    cfg.steps = 4;
    const RunResult r = run_simulation(cfg, AblationMode::rhocell_vector, {});
    const nlohmann::json j = report_json(r.steps);
    CHECK(j["steps"].size() == 4);
    CHECK(j["steps"][0].contains("pps"));
    CHECK(j["summary"].contains("mean_pps"));
    const std::string text = j.dump();
    const nlohmann::json back = nlohmann::json::parse(text);
    CHECK(back == j);
    CHECK(back["steps"][2]["step"] == 2);
}

TEST_CASE("config parsing: names, shapes, and failure modes") {
    const AppConfig cfg = parse_config_text(R"(
# comment
n_cell = 16 x 8 x 4
cell_size = 0.5 1.0 2.0
ppc = 8
shape_order = 3
seed = 99
steps = 7
dt = 0.25
workload_kind = drift_gradient
thermal_speed = 0.02
drift_velocity = 0.1 0 0
gap_ratio = 0.3
min_gap = 3
sort_interval = 40
min_sort_interval = 5
sort_trigger_rebuild_count = 80
sort_trigger_empty_ratio = 0.2
sort_trigger_full_ratio = 0.9
sort_trigger_perf_enable = 0
sort_trigger_perf_degrad = 0.7
)");
    CHECK(cfg.workload.grid.nx == 16);
    CHECK(cfg.workload.grid.ny == 8);
    CHECK(cfg.workload.grid.nz == 4);
    CHECK(cfg.workload.grid.dy == 1.0);
    CHECK(cfg.workload.ppc == 8);
    CHECK(cfg.workload.order == ShapeOrder::qsp);
    CHECK(cfg.workload.seed == 99);
    CHECK(cfg.workload.steps == 7);
    CHECK(cfg.workload.dt == 0.25);
    CHECK(cfg.workload.kind == WorkloadKind::drift_gradient);
    CHECK(cfg.gpma.gap_ratio == 0.3);
    CHECK(cfg.gpma.min_gap == 3);
    CHECK(cfg.policy.sort_interval == 40);
    CHECK(cfg.policy.min_sort_interval == 5);
    CHECK(cfg.policy.trigger_rebuild_count == 80);
    CHECK(cfg.policy.trigger_empty_ratio == 0.2);
    CHECK(cfg.policy.trigger_full_ratio == 0.9);
    CHECK(cfg.policy.perf_enable == false);
    CHECK(cfg.policy.perf_degrad == 0.7);

    CHECK_THROWS_AS(parse_config_text("bogus_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n_cell = 8 8\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("ppc = zero\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("ppc = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("shape_order = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n_cell = 2 2 2\nshape_order = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("nonsense without equals\n"), ConfigError);
}

TEST_CASE("flop accounting is a data-independent constant") {
    CHECK(flop_count_scalar(ShapeOrder::cic) == 76);
    CHECK(flop_count_scalar(ShapeOrder::qsp) == 534);
    static_assert(flop_count_scalar(ShapeOrder::cic) == 76);
}
