#pragma once

#include <cstdio>
#include <span>
#include <string>

#include <json.hpp>

#include "pic/simulation.hpp"

namespace pic {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct MetricsSummary {
    double wall = 0, preproc = 0, compute = 0, sort = 0, reduce = 0;
    double mean_pps = 0, mean_fraction = 0;
    std::uint64_t rebuilds = 0, global_sorts = 0;
};

inline MetricsSummary summarize(std::span<const StepMetrics> steps) {
    MetricsSummary s;
    for (const StepMetrics& m : steps) {
        s.wall += m.wall_s;
        s.preproc += m.preproc_s;
        s.compute += m.compute_s;
        s.sort += m.sort_s;
        s.reduce += m.reduce_s;
        s.mean_pps += m.particles_per_second;
        s.mean_fraction += m.fraction_moved;
        s.rebuilds += m.rebuilds;
        if (m.global_sort != SortReason::none) ++s.global_sorts;
    }
    if (!steps.empty()) {
        s.mean_pps /= static_cast<double>(steps.size());
        s.mean_fraction /= static_cast<double>(steps.size());
    }
    return s;
}

} // namespace detail

inline constexpr const char* kCsvHeader =
    "step,wall_s,preproc_s,compute_s,sort_s,reduce_s,pps,fraction_moved,rebuilds,"
    "global_sort_reason";

/// One row per step plus a summary row (totals for the timing columns, means
/// for throughput and moved fraction, counts for rebuilds and fired sorts).
inline std::string report_csv(std::span<const StepMetrics> steps) {
    using detail::fmt_double;
    std::string out = kCsvHeader;
    out += '\n';
    if (steps.empty()) return out;
    for (const StepMetrics& m : steps) {
        out += std::to_string(m.step) + ',' + fmt_double(m.wall_s) + ',' +
               fmt_double(m.preproc_s) + ',' + fmt_double(m.compute_s) + ',' +
               fmt_double(m.sort_s) + ',' + fmt_double(m.reduce_s) + ',' +
               fmt_double(m.particles_per_second) + ',' + fmt_double(m.fraction_moved) + ',' +
               std::to_string(m.rebuilds) + ',' + to_string(m.global_sort) + '\n';
    }
    const auto s = detail::summarize(steps);
    out += "summary," + fmt_double(s.wall) + ',' + fmt_double(s.preproc) + ',' +
           fmt_double(s.compute) + ',' + fmt_double(s.sort) + ',' + fmt_double(s.reduce) + ',' +
           fmt_double(s.mean_pps) + ',' + fmt_double(s.mean_fraction) + ',' +
           std::to_string(s.rebuilds) + ',' + std::to_string(s.global_sorts) + '\n';
    return out;
}

/// Same records as the CSV, as JSON.
inline nlohmann::json report_json(std::span<const StepMetrics> steps) {
    nlohmann::json j;
    j["steps"] = nlohmann::json::array();
    if (steps.empty()) return j;
    for (const StepMetrics& m : steps) {
        j["steps"].push_back({{"step", m.step},
                              {"wall_s", m.wall_s},
                              {"preproc_s", m.preproc_s},
                              {"compute_s", m.compute_s},
                              {"sort_s", m.sort_s},
                              {"reduce_s", m.reduce_s},
                              {"pps", m.particles_per_second},
                              {"fraction_moved", m.fraction_moved},
                              {"rebuilds", m.rebuilds},
                              {"global_sort_reason", to_string(m.global_sort)}});
    }
    const auto s = detail::summarize(steps);
    j["summary"] = {{"wall_s", s.wall},
                    {"preproc_s", s.preproc},
                    {"compute_s", s.compute},
                    {"sort_s", s.sort},
                    {"reduce_s", s.reduce},
                    {"mean_pps", s.mean_pps},
                    {"mean_fraction_moved", s.mean_fraction},
                    {"rebuilds", s.rebuilds},
                    {"global_sorts", s.global_sorts}};
    return j;
}

} // namespace pic
