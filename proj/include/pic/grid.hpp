#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pic {

using Vec3 = std::array<double, 3>;

enum class Boundary { periodic };

struct CellIndex {
    int i = 0;
    int j = 0;
    int k = 0;
    std::uint32_t linear = 0;
};

/// Simulation box: nx*ny*nz cells, periodic on every axis. Under the periodic
/// wrap the nodal lattice collapses onto the cell lattice, so node arrays use
/// the same linear layout as cells: id = i + nx*(j + ny*k).
struct GridSpec {
    int nx = 1, ny = 1, nz = 1;
    double dx = 1.0, dy = 1.0, dz = 1.0;
    Vec3 origin{0.0, 0.0, 0.0};
    std::array<Boundary, 3> boundary{Boundary::periodic, Boundary::periodic, Boundary::periodic};

    void validate() const {
        if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("grid: cell counts must be >= 1");
        if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0))
            throw std::invalid_argument("grid: cell sizes must be positive");
    }

    std::uint32_t n_cells() const {
        return static_cast<std::uint32_t>(nx) * static_cast<std::uint32_t>(ny) *
               static_cast<std::uint32_t>(nz);
    }
    std::uint32_t n_nodes() const { return n_cells(); }

    int cells(int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    double spacing(int axis) const { return axis == 0 ? dx : axis == 1 ? dy : dz; }
    double length(int axis) const { return cells(axis) * spacing(axis); }
    double min_spacing() const { return std::min(dx, std::min(dy, dz)); }

    // i,j,k already wrapped into range
    std::uint32_t linear_id(int i, int j, int k) const {
        return static_cast<std::uint32_t>(i) +
               static_cast<std::uint32_t>(nx) *
                   (static_cast<std::uint32_t>(j) + static_cast<std::uint32_t>(ny) * static_cast<std::uint32_t>(k));
    }

    std::array<int, 3> cell_coords(std::uint32_t linear) const {
        const int i = static_cast<int>(linear % static_cast<std::uint32_t>(nx));
        const int j = static_cast<int>((linear / static_cast<std::uint32_t>(nx)) % static_cast<std::uint32_t>(ny));
        const int k = static_cast<int>(linear / (static_cast<std::uint32_t>(nx) * static_cast<std::uint32_t>(ny)));
        return {i, j, k};
    }

    // Wraps an arbitrary (possibly negative) index onto [0, n).
    static int wrap(int i, int n) {
        int r = i % n;
        return r < 0 ? r + n : r;
    }

    std::uint32_t node_id(int i, int j, int k) const {
        return linear_id(wrap(i, nx), wrap(j, ny), wrap(k, nz));
    }
};

namespace detail {

struct AxisLocation {
    int cell;    // wrapped into [0, n)
    double frac; // in [0, 1)
};

inline AxisLocation locate_axis(double x, double origin, double spacing, int n) {
    const double u = (x - origin) / spacing;
    double fu = std::floor(u);
    double frac = u - fu;
    // A tiny negative u rounds (u - floor(u)) up to exactly 1.0; renormalize
    // to keep the half-open [0,1) convention.
    if (frac >= 1.0) {
        frac = 0.0;
        fu += 1.0;
    }
    if (fu >= 0.0 && fu < static_cast<double>(n)) // in-box, no wrap needed
        return {static_cast<int>(fu), frac};
    // fmod is exact on integral doubles, so huge coordinates wrap without
    // overflowing the int conversion.
    double c = std::fmod(fu, static_cast<double>(n));
    if (c < 0.0) c += static_cast<double>(n);
    int ci = static_cast<int>(c);
    if (ci == n) ci = 0;
    return {ci, frac};
}

} // namespace detail

/// Cell indices of a position under periodic wrapping.
/// Throws std::invalid_argument for non-finite positions (corrupted state).
inline CellIndex cell_of(const Vec3& p, const GridSpec& g) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        throw std::invalid_argument("cell_of: non-finite particle position");
    const auto ax = detail::locate_axis(p[0], g.origin[0], g.dx, g.nx);
    const auto ay = detail::locate_axis(p[1], g.origin[1], g.dy, g.ny);
    const auto az = detail::locate_axis(p[2], g.origin[2], g.dz, g.nz);
    return {ax.cell, ay.cell, az.cell, g.linear_id(ax.cell, ay.cell, az.cell)};
}

/// Normalized intra-cell coordinates, each in [0,1). A particle exactly on a
/// cell boundary belongs to the higher cell.
inline Vec3 intra_cell_coords(const Vec3& p, const GridSpec& g) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        throw std::invalid_argument("intra_cell_coords: non-finite particle position");
    return {detail::locate_axis(p[0], g.origin[0], g.dx, g.nx).frac,
            detail::locate_axis(p[1], g.origin[1], g.dy, g.ny).frac,
            detail::locate_axis(p[2], g.origin[2], g.dz, g.nz).frac};
}

/// Nodal current-density arrays, one per component, collapsed to nx*ny*nz
/// entries by the periodic wrap.
struct CurrentGrid {
    GridSpec spec;
    std::vector<double> jx, jy, jz;

    CurrentGrid() = default;
    explicit CurrentGrid(const GridSpec& g)
        : spec(g), jx(g.n_nodes(), 0.0), jy(g.n_nodes(), 0.0), jz(g.n_nodes(), 0.0) {}

    std::vector<double>& component(int c) { return c == 0 ? jx : c == 1 ? jy : jz; }
    const std::vector<double>& component(int c) const { return c == 0 ? jx : c == 1 ? jy : jz; }

    std::array<double, 3> component_sums() const {
        std::array<double, 3> s{0.0, 0.0, 0.0};
        for (int c = 0; c < 3; ++c)
            for (double v : component(c)) s[c] += v;
        return s;
    }

    void zero() {
        std::fill(jx.begin(), jx.end(), 0.0);
        std::fill(jy.begin(), jy.end(), 0.0);
        std::fill(jz.begin(), jz.end(), 0.0);
    }
};

} // namespace pic
