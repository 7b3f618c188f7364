#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pic/grid.hpp"
#include "pic/shape.hpp"

namespace pic {

/// Per-cell conflict-free accumulator for one current component: column
/// i_cell packs the nodes_per_cell contributions of cell i_cell contiguously.
struct RhocellBuffer {
    int nodes = 0;
    std::uint32_t ncells = 0;
    std::vector<double> data; // [node + nodes*cell]

    std::span<double> column(std::uint32_t cell) {
        return {data.data() + static_cast<std::size_t>(nodes) * cell, static_cast<std::size_t>(nodes)};
    }
    std::span<const double> column(std::uint32_t cell) const {
        return {data.data() + static_cast<std::size_t>(nodes) * cell, static_cast<std::size_t>(nodes)};
    }

    double total() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

/// Maps (cell, local node) to the global node id. Local ordering is x
/// fastest, then y, then z; the stencil base is the cell corner for CIC and
/// one node below it for QSP, wrapped periodically. Injective per cell as
/// long as every axis has at least `support` cells.
struct NodeMap {
    GridSpec grid;
    ShapeOrder order = ShapeOrder::cic;

    NodeMap(const GridSpec& g, ShapeOrder o) : grid(g), order(o) {
        const int s = support(o);
        if (grid.nx < s || grid.ny < s || grid.nz < s)
            throw std::invalid_argument("node map: grid smaller than the stencil support");
    }

    std::uint32_t operator()(std::uint32_t cell, int local) const {
        const int s = support(order);
        const auto [i, j, k] = grid.cell_coords(cell);
        const int off = order == ShapeOrder::cic ? 0 : -1;
        const int di = local % s;
        const int dj = (local / s) % s;
        const int dk = local / (s * s);
        return grid.node_id(i + off + di, j + off + dj, k + off + dk);
    }
};

inline constexpr std::size_t kDefaultRhocellBudget = std::size_t{1} << 30; // bytes

/// Three zeroed accumulation buffers (jx, jy, jz) sized nodes_per_cell x
/// n_cells. Throws std::length_error when the allocation would exceed the
/// memory budget.
inline std::array<RhocellBuffer, 3> rhocell_alloc(const GridSpec& g, ShapeOrder order,
                                                  std::size_t budget_bytes = kDefaultRhocellBudget) {
    const int nodes = nodes_per_cell(order);
    const std::size_t doubles = static_cast<std::size_t>(nodes) * g.n_cells();
    if (doubles * 3 * sizeof(double) > budget_bytes)
        throw std::length_error("rhocell_alloc: buffers exceed the memory budget");
    std::array<RhocellBuffer, 3> bufs;
    for (auto& b : bufs) {
        b.nodes = nodes;
        b.ncells = g.n_cells();
        b.data.assign(doubles, 0.0);
    }
    return bufs;
}

/// Adds one particle's contribution block into its cell's column.
inline void rhocell_add(RhocellBuffer& buf, std::uint32_t cell, std::span<const double> block) {
    if (cell >= buf.ncells) throw std::out_of_range("rhocell_add: cell out of range");
    if (block.size() != static_cast<std::size_t>(buf.nodes))
        throw std::invalid_argument("rhocell_add: block length mismatch");
    auto col = buf.column(cell);
    for (int n = 0; n < buf.nodes; ++n) col[n] += block[n];
}

/// Scatter-adds every buffer entry onto the grid, visiting each entry exactly
/// once in a fixed order (component, then cell ascending, then node
/// ascending), and zeroes the buffers for reuse.
inline void rhocell_reduce(std::array<RhocellBuffer, 3>& bufs, CurrentGrid& grid, ShapeOrder order) {
    const NodeMap map(grid.spec, order);
    for (int c = 0; c < 3; ++c) {
        auto& field = grid.component(c);
        auto& buf = bufs[c];
        for (std::uint32_t cell = 0; cell < buf.ncells; ++cell) {
            const auto col = buf.column(cell);
            for (int n = 0; n < buf.nodes; ++n) field[map(cell, n)] += col[n];
        }
        buf.zero();
    }
}

} // namespace pic
