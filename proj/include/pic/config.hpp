#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pic/gpma.hpp"
#include "pic/sort_policy.hpp"
#include "pic/workload.hpp"

namespace pic {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AppConfig {
    WorkloadConfig workload;
    SortPolicy policy;
    GpmaConfig gpma;

    void validate() const {
        try {
            workload.validate();
            policy.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(gpma.gap_ratio >= 0.0 && gpma.gap_ratio < 1.0))
            throw ConfigError("config: gap_ratio must lie in [0,1)");
    }
};

namespace detail {

inline std::vector<std::string> split_values(std::string_view v) {
    std::string s(v);
    for (char& ch : s)
        if (ch == 'x' || ch == 'X' || ch == ',') ch = ' ';
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": " + s);
    }
}

inline long long to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": " + s);
    }
}

} // namespace detail

/// Flat key=value configuration. '#' starts a comment; multi-valued keys
/// (n_cell, cell_size, origin, drift_velocity) accept space- or
/// 'x'-separated triples.
inline AppConfig parse_config_text(std::string_view text) {
    AppConfig cfg;
    std::istringstream lines{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const auto vals = detail::split_values(line.substr(eq + 1));
        if (key.empty() || vals.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        auto want = [&](std::size_t n) {
            if (vals.size() != n)
                throw ConfigError("config: " + key + " expects " + std::to_string(n) + " value(s)");
        };
        auto& w = cfg.workload;
        if (key == "n_cell") {
            want(3);
            w.grid.nx = static_cast<int>(detail::to_int(vals[0], key));
            w.grid.ny = static_cast<int>(detail::to_int(vals[1], key));
            w.grid.nz = static_cast<int>(detail::to_int(vals[2], key));
        } else if (key == "cell_size") {
            want(3);
            w.grid.dx = detail::to_double(vals[0], key);
            w.grid.dy = detail::to_double(vals[1], key);
            w.grid.dz = detail::to_double(vals[2], key);
        } else if (key == "origin") {
            want(3);
            for (int a = 0; a < 3; ++a) w.grid.origin[a] = detail::to_double(vals[a], key);
        } else if (key == "ppc") {
            want(1);
            w.ppc = static_cast<int>(detail::to_int(vals[0], key));
        } else if (key == "shape_order") {
            want(1);
            const long long o = detail::to_int(vals[0], key);
            if (o == 1) w.order = ShapeOrder::cic;
            else if (o == 3) w.order = ShapeOrder::qsp;
            else throw ConfigError("config: shape_order must be 1 or 3");
        } else if (key == "seed") {
            want(1);
            w.seed = static_cast<std::uint64_t>(detail::to_int(vals[0], key));
        } else if (key == "steps") {
            want(1);
            w.steps = static_cast<int>(detail::to_int(vals[0], key));
        } else if (key == "dt") {
            want(1);
            w.dt = detail::to_double(vals[0], key);
        } else if (key == "workload_kind") {
            want(1);
            if (vals[0] == "uniform_plasma" || vals[0] == "uniform")
                w.kind = WorkloadKind::uniform_plasma;
            else if (vals[0] == "drift_gradient" || vals[0] == "drift")
                w.kind = WorkloadKind::drift_gradient;
            else throw ConfigError("config: unknown workload_kind: " + vals[0]);
        } else if (key == "thermal_speed") {
            want(1);
            w.thermal_speed = detail::to_double(vals[0], key);
        } else if (key == "drift_velocity") {
            want(3);
            for (int a = 0; a < 3; ++a) w.drift_velocity[a] = detail::to_double(vals[a], key);
        } else if (key == "charge") {
            want(1);
            w.charge = detail::to_double(vals[0], key);
        } else if (key == "gap_ratio") {
            want(1);
            cfg.gpma.gap_ratio = detail::to_double(vals[0], key);
        } else if (key == "min_gap") {
            want(1);
            cfg.gpma.min_gap = static_cast<std::uint32_t>(detail::to_int(vals[0], key));
        } else if (key == "sort_interval") {
            want(1);
            cfg.policy.sort_interval = static_cast<std::uint32_t>(detail::to_int(vals[0], key));
        } else if (key == "min_sort_interval") {
            want(1);
            cfg.policy.min_sort_interval = static_cast<std::uint32_t>(detail::to_int(vals[0], key));
        } else if (key == "sort_trigger_rebuild_count") {
            want(1);
            cfg.policy.trigger_rebuild_count =
                static_cast<std::uint32_t>(detail::to_int(vals[0], key));
        } else if (key == "sort_trigger_empty_ratio") {
            want(1);
            cfg.policy.trigger_empty_ratio = detail::to_double(vals[0], key);
        } else if (key == "sort_trigger_full_ratio") {
            want(1);
            cfg.policy.trigger_full_ratio = detail::to_double(vals[0], key);
        } else if (key == "sort_trigger_perf_enable") {
            want(1);
            cfg.policy.perf_enable = detail::to_int(vals[0], key) != 0;
        } else if (key == "sort_trigger_perf_degrad") {
            want(1);
            cfg.policy.perf_degrad = detail::to_double(vals[0], key);
        } else {
            throw ConfigError("config: unknown key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

inline AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace pic
