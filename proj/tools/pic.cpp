// Command-line driver: run a single deposition mode, sweep all ablation
// modes, verify the kernels against the scalar reference, or benchmark a
// particle-density sweep.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pic/pic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitConfigError = 2;

double grid_max_rel_err(const pic::CurrentGrid& got, const pic::CurrentGrid& want) {
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

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

int cmd_run(const std::string& config_path, const std::string& mode_name, const std::string& out,
            const std::string& format) {
    const pic::AppConfig cfg = pic::load_config(config_path);
    const pic::AblationMode mode = pic::mode_from_string(mode_name);
    const pic::RunResult r = pic::run_simulation(cfg.workload, mode, cfg.policy, cfg.gpma);
    if (format == "json") {
        auto j = pic::report_json(r.steps);
        j["mode"] = pic::to_string(mode);
        j["checksum"] = {r.checksum[0], r.checksum[1], r.checksum[2]};
        write_text(out, j.dump(2) + "\n");
    } else {
        write_text(out, pic::report_csv(r.steps));
    }
    std::fprintf(stderr, "[run] mode=%s steps=%zu particles=%zu checksum=(%.17g, %.17g, %.17g)\n",
                 pic::to_string(mode), r.steps.size(), r.particles.size(), r.checksum[0],
                 r.checksum[1], r.checksum[2]);
    return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
    const pic::AppConfig cfg = pic::load_config(config_path);
    std::filesystem::create_directories(out_dir);

    std::string summary =
        "mode,total_wall_s,total_preproc_s,total_compute_s,total_sort_s,total_reduce_s,"
        "mean_pps,total_rebuilds,global_sorts,oracle_max_rel_err\n";
    bool all_match = true;
    for (const pic::AblationMode mode : pic::kAllModes) {
        const pic::RunResult r = pic::run_simulation(cfg.workload, mode, cfg.policy, cfg.gpma);
        write_text(out_dir + "/" + pic::to_string(mode) + ".csv", pic::report_csv(r.steps));

        double wall = 0, pre = 0, comp = 0, sort = 0, red = 0, pps = 0;
        std::uint64_t rebuilds = 0, sorts = 0;
        for (const auto& m : r.steps) {
            wall += m.wall_s; pre += m.preproc_s; comp += m.compute_s;
            sort += m.sort_s; red += m.reduce_s; pps += m.particles_per_second;
            rebuilds += m.rebuilds;
            if (m.global_sort != pic::SortReason::none) ++sorts;
        }
        if (!r.steps.empty()) pps /= static_cast<double>(r.steps.size());

        // every mode must reproduce the scalar reference on the final state
        const pic::CurrentGrid oracle =
            pic::deposit_scalar(r.particles, cfg.workload.grid, cfg.workload.order);
        const double err = cfg.workload.steps > 0 ? grid_max_rel_err(r.final_grid, oracle) : 0.0;
        if (err >= 1e-13) all_match = false;

        char row[512];
        std::snprintf(row, sizeof(row), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6g,%llu,%llu,%.3g\n",
                      pic::to_string(mode), wall, pre, comp, sort, red, pps,
                      static_cast<unsigned long long>(rebuilds),
                      static_cast<unsigned long long>(sorts), err);
        summary += row;
        std::fprintf(stderr, "[ablate] %-18s wall=%.4fs sort=%.4fs pps=%.3g oracle_err=%.3g\n",
                      pic::to_string(mode), wall, sort, pps, err);
    }
    write_text(out_dir + "/ablate_summary.csv", summary);
    if (!all_match) {
        std::fprintf(stderr, "[ablate] FAIL: a mode deviates from the scalar reference\n");
        return kExitVerifyFailure;
    }
    std::fprintf(stderr, "[ablate] all modes match the scalar reference\n");
    return kExitOk;
}

bool verify_kernels(std::uint64_t seed, pic::ShapeOrder order) {
    using namespace pic;
    bool ok = true;
    for (int ppc : {1, 8}) {
        WorkloadConfig cfg;
        cfg.grid.nx = cfg.grid.ny = cfg.grid.nz = 6;
        cfg.ppc = ppc;
        cfg.kind = WorkloadKind::drift_gradient;
        cfg.seed = seed;
        cfg.order = order;
        ParticleSoA soa = make_workload(cfg);
        advance(soa, cfg.dt, cfg.grid);
        const CurrentGrid want = deposit_scalar(soa, cfg.grid, order);

        ParticleSoA sorted = soa;
        Gpma gpma = gpma_build(sorted, cfg.grid, {});
        TiledOptions t_sorted;
        t_sorted.gpma = &gpma;
        TiledOptions t_flush;
        t_flush.residency = false;
        const struct {
            const char* name;
            CurrentGrid grid;
        } kernels[] = {
            {"rhocell-vector", deposit_rhocell_vector(soa, cfg.grid, order)},
            {"tiled-pairflush", deposit_tiled(soa, cfg.grid, order, t_flush)},
            {"tiled-runs", deposit_tiled(soa, cfg.grid, order, {})},
            {"tiled-sorted", deposit_tiled(sorted, cfg.grid, order, t_sorted)},
            {"scalar-sorted", deposit_scalar(sorted, cfg.grid, order, &gpma)},
        };
        for (const auto& k : kernels) {
            const double err = grid_max_rel_err(k.grid, want);
            const bool pass = err < 1e-13;
            ok = ok && pass;
            std::printf("[verify] kernel %-16s order=%d ppc=%-3d err=%8.2e %s\n", k.name,
                        static_cast<int>(order), ppc, err, pass ? "PASS" : "FAIL");
        }

        // conservation against the particle totals
        const auto sums = want.component_sums();
        for (int c = 0; c < 3; ++c) {
            double total = 0, scale = 0;
            for (std::size_t p = 0; p < soa.size(); ++p) {
                total += particle_weights(soa, p)[c];
                scale += std::abs(particle_weights(soa, p)[c]);
            }
            const bool pass = std::abs(sums[c] - total) <= 1e-12 * std::max(std::abs(total), scale);
            ok = ok && pass;
            if (!pass) std::printf("[verify] conservation component %d FAIL\n", c);
        }
    }
    return ok;
}

bool verify_tile(std::uint64_t seed) {
    using namespace pic;
    for (int t = 0; t < 2000; ++t) {
        const std::size_t na = 1 + hash_combine(seed, t, 0) % 8;
        const std::size_t nb = 1 + hash_combine(seed, t, 1) % 8;
        std::vector<double> a(na), b(nb);
        for (std::size_t i = 0; i < na; ++i) a[i] = 2.0 * uniform01(seed, t, 100 + i) - 1.0;
        for (std::size_t j = 0; j < nb; ++j) b[j] = 2.0 * uniform01(seed, t, 200 + j) - 1.0;
        Tile tile = tile_zero();
        mopa(tile, a, b);
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j)
                if (tile.c[i][j] != a[i] * b[j]) return false;
    }
    return true;
}

bool verify_gpma(std::uint64_t seed) {
    using namespace pic;
    WorkloadConfig cfg;
    cfg.grid.nx = cfg.grid.ny = cfg.grid.nz = 8;
    cfg.ppc = 8;
    cfg.kind = WorkloadKind::drift_gradient;
    cfg.seed = seed;
    ParticleSoA soa = make_workload(cfg);
    Gpma gpma = gpma_build(soa, cfg.grid, {});
    try {
        for (int step = 0; step < 50; ++step) {
            advance(soa, cfg.dt, cfg.grid);
            auto pending = gpma.detect_moves(soa, cfg.grid);
            apply_pending_moves(gpma, pending);
            gpma.validate(soa, cfg.grid);
        }
    } catch (const std::logic_error& e) {
        std::printf("[verify] gpma invariants FAIL: %s\n", e.what());
        return false;
    }
    return true;
}

bool verify_policy_table() {
    using namespace pic;
    const SortPolicy def;
    auto stats = [](std::uint32_t steps, std::uint64_t rebuilds, double ratio, double perf,
                    double base) {
        RankSortStats s;
        s.steps_since_sort = steps;
        s.cumulative_local_rebuilds = rebuilds;
        s.empty_slot_ratio = ratio;
        s.perf_metric = perf;
        s.baseline_perf = base;
        return s;
    };
    return should_global_sort(stats(5, 1000, 0.01, 1.0, 100.0), def) == SortReason::none &&
           should_global_sort(stats(50, 0, 0.5, 0.0, 0.0), def) == SortReason::interval &&
           should_global_sort(stats(20, 101, 0.5, 0.0, 0.0), def) == SortReason::rebuilds &&
           should_global_sort(stats(20, 0, 0.10, 0.0, 0.0), def) == SortReason::slot_ratio &&
           should_global_sort(stats(20, 0, 0.90, 0.0, 0.0), def) == SortReason::slot_ratio &&
           should_global_sort(stats(20, 0, 0.5, 79.0, 100.0), def) ==
               SortReason::perf_degradation &&
           should_global_sort(stats(20, 0, 0.5, 81.0, 100.0), def) == SortReason::none;
}

int cmd_verify(int order_flag, std::uint64_t seed) {
    bool ok = true;

    ok &= verify_tile(seed);
    std::printf("[verify] tile outer-product contract %s\n", ok ? "PASS" : "FAIL");

    const bool g = verify_gpma(seed);
    std::printf("[verify] incremental sort invariants %s\n", g ? "PASS" : "FAIL");
    ok &= g;

    const bool pol = verify_policy_table();
    std::printf("[verify] resort decision strategies %s\n", pol ? "PASS" : "FAIL");
    ok &= pol;

    if (order_flag == 0 || order_flag == 1) ok &= verify_kernels(seed, pic::ShapeOrder::cic);
    if (order_flag == 0 || order_flag == 3) ok &= verify_kernels(seed, pic::ShapeOrder::qsp);

    std::printf("[verify] flops/particle: cic=%d qsp=%d (reference effective-work figure: 419)\n",
                pic::flop_count_scalar(pic::ShapeOrder::cic),
                pic::flop_count_scalar(pic::ShapeOrder::qsp));
    std::printf("[verify] %s\n", ok ? "ALL PASS" : "FAILURES DETECTED");
    return ok ? kExitOk : kExitVerifyFailure;
}

int cmd_bench(const std::string& config_path, bool ppc_sweep, const std::string& mode_name,
              const std::string& out) {
    const pic::AppConfig cfg = pic::load_config(config_path);
    const pic::AblationMode mode = pic::mode_from_string(mode_name);
    std::vector<int> ppcs = ppc_sweep ? std::vector<int>{1, 4, 8, 16, 32, 64, 128}
                                      : std::vector<int>{cfg.workload.ppc};
    std::string csv =
        "ppc,particles,steps,mean_pps,total_wall_s,total_preproc_s,total_compute_s,"
        "total_sort_s,total_reduce_s,flops_per_particle,effective_gflops\n";
    const int flops = pic::flop_count_scalar(cfg.workload.order);
    for (int ppc : ppcs) {
        pic::WorkloadConfig w = cfg.workload;
        w.ppc = ppc;
        const pic::RunResult r = pic::run_simulation(w, mode, cfg.policy, cfg.gpma);
        double wall = 0, pre = 0, comp = 0, sort = 0, red = 0, pps = 0;
        for (const auto& m : r.steps) {
            wall += m.wall_s; pre += m.preproc_s; comp += m.compute_s;
            sort += m.sort_s; red += m.reduce_s; pps += m.particles_per_second;
        }
        if (!r.steps.empty()) pps /= static_cast<double>(r.steps.size());
        char row[512];
        std::snprintf(row, sizeof(row), "%d,%zu,%zu,%.6g,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.6g\n", ppc,
                      r.particles.size(), r.steps.size(), pps, wall, pre, comp, sort, red, flops,
                      pps * flops * 1e-9);
        csv += row;
        std::fprintf(stderr, "[bench] mode=%s ppc=%-4d pps=%.4g\n", pic::to_string(mode), ppc, pps);
    }
    std::fprintf(stderr,
                 "[bench] effective work: cic=%d qsp=%d flop/particle "
                 "(reference effective-work figure for the third order: 419)\n",
                 pic::flop_count_scalar(pic::ShapeOrder::cic),
                 pic::flop_count_scalar(pic::ShapeOrder::qsp));
    write_text(out, csv);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"particle-in-cell current deposition toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", mode_name = "fullopt";
    int order_flag = 0;
    std::uint64_t seed = 1;
    bool ppc_sweep = false;

    auto* run = app.add_subcommand("run", "simulate one mode and report per-step metrics");
    run->add_option("--config", config_path, "key=value config file")->required();
    run->add_option("--mode", mode_name, "kernel/sorting mode");
    run->add_option("--out", out_path, "output path ('-' for stdout)");
    run->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* ablate = app.add_subcommand("ablate", "run every mode, one combined report");
    ablate->add_option("--config", config_path, "key=value config file")->required();
    ablate->add_option("--out", out_path, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "kernel-equivalence and invariant checks");
    verify->add_option("--order", order_flag, "restrict to one shape order (1 or 3)")
        ->check(CLI::IsMember({0, 1, 3}));
    verify->add_option("--seed", seed, "base seed");

    auto* bench = app.add_subcommand("bench", "throughput benchmark");
    bench->add_option("--config", config_path, "key=value config file")->required();
    bench->add_flag("--ppc-sweep", ppc_sweep, "sweep ppc over 1,4,8,16,32,64,128");
    bench->add_option("--mode", mode_name, "kernel/sorting mode");
    bench->add_option("--out", out_path, "output path ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, mode_name, out_path, format);
        if (ablate->parsed()) return cmd_ablate(config_path, out_path);
        if (verify->parsed()) return cmd_verify(order_flag, seed);
        if (bench->parsed()) return cmd_bench(config_path, ppc_sweep, mode_name, out_path);
    } catch (const pic::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitVerifyFailure;
    }
    return kExitOk;
}
