#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pic/deposit.hpp"
#include "pic/gpma.hpp"
#include "pic/grid.hpp"
#include "pic/sort_policy.hpp"
#include "pic/workload.hpp"

namespace pic {

/// Kernel/sorting configurations selectable at the command line.
enum class AblationMode {
    baseline,          // scalar reference kernel, storage order
    matrix_only,       // tile kernel alone, per-pair flushes, no sorting
    hybrid_nosort,     // full three-stage pipeline, storage order
    hybrid_globalsort, // pipeline plus a full counting sort every step
    fullopt,           // pipeline + incremental sort + adaptive resort policy
    rhocell_vector,    // per-cell buffer kernel without the tile engine
    baseline_incrsort, // scalar kernel iterating the incrementally sorted bins
    rhocell_incrsort,  // buffer kernel iterating the incrementally sorted bins
};

inline constexpr std::array<AblationMode, 8> kAllModes{
    AblationMode::baseline,          AblationMode::matrix_only,
    AblationMode::hybrid_nosort,     AblationMode::hybrid_globalsort,
    AblationMode::fullopt,           AblationMode::rhocell_vector,
    AblationMode::baseline_incrsort, AblationMode::rhocell_incrsort};

inline const char* to_string(AblationMode m) {
    switch (m) {
        case AblationMode::baseline: return "baseline";
        case AblationMode::matrix_only: return "matrix-only";
        case AblationMode::hybrid_nosort: return "hybrid-nosort";
        case AblationMode::hybrid_globalsort: return "hybrid-globalsort";
        case AblationMode::fullopt: return "fullopt";
        case AblationMode::rhocell_vector: return "rhocell-vector";
        case AblationMode::baseline_incrsort: return "baseline-incrsort";
        case AblationMode::rhocell_incrsort: return "rhocell-incrsort";
    }
    return "?";
}

inline AblationMode mode_from_string(std::string_view s) {
    for (AblationMode m : kAllModes)
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown mode: " + std::string(s));
}

inline bool mode_uses_gpma(AblationMode m) {
    return m == AblationMode::hybrid_globalsort || m == AblationMode::fullopt ||
           m == AblationMode::baseline_incrsort || m == AblationMode::rhocell_incrsort;
}

inline bool mode_incremental_sort(AblationMode m) {
    return m == AblationMode::fullopt || m == AblationMode::baseline_incrsort ||
           m == AblationMode::rhocell_incrsort;
}

struct StepMetrics {
    std::uint32_t step = 0;
    double wall_s = 0.0;
    double preproc_s = 0.0;
    double compute_s = 0.0;
    double sort_s = 0.0;
    double reduce_s = 0.0;
    double particles_per_second = 0.0;
    double fraction_moved = 0.0;
    std::uint32_t rebuilds = 0;
    SortReason global_sort = SortReason::none;
};

struct RunResult {
    std::vector<StepMetrics> steps;
    std::array<double, 3> checksum{0.0, 0.0, 0.0}; // per-component grid sums, final step
    CurrentGrid final_grid;
    ParticleSoA particles; // state after the last step
    RankSortStats stats;
};

/// Per step: advance, mode-dependent sorting, deposition, metrics, then (for
/// the fully optimized mode) the adaptive global-resort decision. The
/// throughput metric covers the deposition phase of the step: preprocessing,
/// compute, incremental/per-step sorting, and reduction.
inline RunResult run_simulation(const WorkloadConfig& cfg, AblationMode mode,
                                const SortPolicy& policy = {}, const GpmaConfig& gcfg = {}) {
    cfg.validate();
    policy.validate();
    RunResult out;
    out.particles = make_workload(cfg);
    const GridSpec& g = cfg.grid;
    out.final_grid = CurrentGrid(g);
    const std::size_t n = out.particles.size();

    Gpma gpma;
    if (mode_uses_gpma(mode)) gpma = gpma_build(out.particles, g, gcfg);

    for (int step = 0; step < cfg.steps; ++step) {
        StepMetrics m;
        m.step = static_cast<std::uint32_t>(step);
        Timer wall;

        m.fraction_moved = advance(out.particles, cfg.dt, g);

        const std::uint64_t rebuilds_before = gpma.rebuild_count();
        if (mode == AblationMode::hybrid_globalsort) {
            Timer t;
            global_sort(gpma, out.particles, g);
            m.sort_s += t.elapsed();
        } else if (mode_incremental_sort(mode)) {
            Timer t;
            auto pending = gpma.detect_moves(out.particles, g);
            const ApplyMovesResult res = apply_pending_moves(gpma, pending);
            m.sort_s += t.elapsed();
            out.stats.total_inserts += res.inserts;
            out.stats.total_shifts += res.shifted;
        }
        m.rebuilds = static_cast<std::uint32_t>(gpma.rebuild_count() - rebuilds_before);
        gpma.clear_rebuilt_flag();

        StageTimes st;
        CurrentGrid grid;
        switch (mode) {
            case AblationMode::baseline:
            case AblationMode::baseline_incrsort: {
                Timer t;
                grid = deposit_scalar(out.particles, g, cfg.order,
                                      mode_uses_gpma(mode) ? &gpma : nullptr);
                st.compute = t.elapsed();
                break;
            }
            case AblationMode::rhocell_vector:
            case AblationMode::rhocell_incrsort: {
                Timer t;
                grid = deposit_rhocell_vector(out.particles, g, cfg.order,
                                              mode_uses_gpma(mode) ? &gpma : nullptr, &st.reduce);
                st.compute = t.elapsed() - st.reduce;
                break;
            }
            default: {
                TiledOptions opt;
                opt.gpma = mode_uses_gpma(mode) ? &gpma : nullptr;
                opt.residency = mode != AblationMode::matrix_only;
                grid = deposit_tiled(out.particles, g, cfg.order, opt, &st);
                break;
            }
        }
        m.preproc_s = st.preproc;
        m.compute_s = st.compute;
        m.reduce_s = st.reduce;
        const double deposition_s =
            std::max(m.preproc_s + m.compute_s + m.sort_s + m.reduce_s, 1e-12);
        m.particles_per_second = static_cast<double>(n) / deposition_s;

        out.stats.perf_metric = m.particles_per_second;
        out.stats.steps_since_sort += 1;
        out.stats.cumulative_local_rebuilds += m.rebuilds;
        if (mode_uses_gpma(mode)) out.stats.empty_slot_ratio = gpma.empty_slot_ratio();
        if (mode == AblationMode::fullopt) {
            if (out.stats.baseline_perf == 0.0) out.stats.baseline_perf = m.particles_per_second;
            const SortReason reason = should_global_sort(out.stats, policy);
            if (reason != SortReason::none) {
                Timer t;
                global_sort(gpma, out.particles, g);
                m.sort_s += t.elapsed();
                reset_counters(out.stats);
                m.global_sort = reason;
            }
        }

        m.wall_s = wall.elapsed();
        out.steps.push_back(m);
        out.final_grid = std::move(grid);
    }
    out.checksum = out.final_grid.component_sums();
    return out;
}

} // namespace pic
