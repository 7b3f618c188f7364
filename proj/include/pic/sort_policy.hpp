#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pic/gpma.hpp"

namespace pic {

/// Adaptive global-resort policy knobs.
struct SortPolicy {
    std::uint32_t sort_interval = 50;
    std::uint32_t min_sort_interval = 10;
    std::uint32_t trigger_rebuild_count = 100;
    double trigger_empty_ratio = 0.15;
    double trigger_full_ratio = 0.85;
    bool perf_enable = true;
    double perf_degrad = 0.80;

    void validate() const {
        if (min_sort_interval > sort_interval)
            throw std::invalid_argument("policy: min_sort_interval exceeds sort_interval");
        if (!(trigger_empty_ratio > 0.0 && trigger_empty_ratio < 1.0) ||
            !(trigger_full_ratio > 0.0 && trigger_full_ratio < 1.0))
            throw std::invalid_argument("policy: slot-ratio triggers must lie in (0,1)");
        if (!(perf_degrad > 0.0 && perf_degrad <= 1.0))
            throw std::invalid_argument("policy: perf_degrad must lie in (0,1]");
    }
};

/// Per-rank counters feeding the resort decision. baseline_perf of zero means
/// "not yet primed": the first measurement after a global sort becomes the
/// baseline, and the degradation strategy stays quiet until then.
struct RankSortStats {
    std::uint32_t steps_since_sort = 0;
    std::uint64_t cumulative_local_rebuilds = 0;
    double empty_slot_ratio = 0.0;
    double perf_metric = 0.0;   // particles/s of the last deposition
    double baseline_perf = 0.0; // particles/s recorded right after the last sort
    // Run-scope insert accounting (never reset) for amortized-cost reporting.
    std::uint64_t total_inserts = 0;
    std::uint64_t total_shifts = 0;
};

enum class SortReason { none, interval, rebuilds, slot_ratio, perf_degradation };

inline const char* to_string(SortReason r) {
    switch (r) {
        case SortReason::interval: return "interval";
        case SortReason::rebuilds: return "rebuilds";
        case SortReason::slot_ratio: return "slot_ratio";
        case SortReason::perf_degradation: return "perf_degradation";
        default: return "none";
    }
}

/// Five prioritized strategies, evaluated in order: (1) respect the minimum
/// interval, (2) fixed interval, (3) accumulated local rebuilds, (4) empty
/// slots out of band, (5) throughput degradation versus the baseline.
/// Pure function of its inputs.
inline SortReason should_global_sort(const RankSortStats& stats, const SortPolicy& policy) {
    if (stats.steps_since_sort < policy.min_sort_interval) return SortReason::none;
    if (stats.steps_since_sort >= policy.sort_interval) return SortReason::interval;
    if (stats.cumulative_local_rebuilds > policy.trigger_rebuild_count) return SortReason::rebuilds;
    if (stats.empty_slot_ratio < policy.trigger_empty_ratio ||
        stats.empty_slot_ratio > policy.trigger_full_ratio)
        return SortReason::slot_ratio;
    if (policy.perf_enable && stats.baseline_perf > 0.0 &&
        stats.perf_metric < policy.perf_degrad * stats.baseline_perf)
        return SortReason::perf_degradation;
    return SortReason::none;
}

inline void reset_counters(RankSortStats& stats) {
    stats.steps_since_sort = 0;
    stats.cumulative_local_rebuilds = 0;
    stats.baseline_perf = 0.0;
}

/// Full counting sort: physically reorders the particle store by cell and
/// rebuilds the index from scratch.
inline void global_sort(Gpma& gpma, ParticleSoA& soa, const GridSpec& grid) {
    gpma = gpma_build(soa, grid, gpma.config());
}

} // namespace pic
