#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "pic/gpma.hpp"
#include "pic/grid.hpp"
#include "pic/particles.hpp"
#include "pic/rhocell.hpp"
#include "pic/shape.hpp"
#include "pic/tile.hpp"

namespace pic {

struct Timer {
    using clock = std::chrono::steady_clock;
    clock::time_point t0 = clock::now();
    double elapsed() const { return std::chrono::duration<double>(clock::now() - t0).count(); }
};

/// Generic N-component scatter-add: deposits per-particle quantities through
/// the shape function onto nodal fields. Current deposition is the
/// three-component instance; a one-component quantity (mass, charge) is the
/// degenerate case with the velocity factor replaced by 1. Iterates in
/// storage order, or in bin order when an index is supplied. Fixed summation
/// order either way.
template <class WeightsFn>
void scatter_deposit(const ParticleSoA& soa, const GridSpec& g, ShapeOrder order,
                     std::span<std::vector<double>* const> fields, WeightsFn&& weights,
                     const Gpma* gpma = nullptr) {
    const int S = support(order);
    const int ncomp = static_cast<int>(fields.size());
    std::array<double, 8> wq{};
    auto deposit_one = [&](std::size_t p) {
        const ShapeFactors f = compute_shape_factors(soa.position(p), g, order);
        weights(p, std::span<double>(wq.data(), ncomp));
        for (int kz = 0; kz < S; ++kz)
            for (int jy = 0; jy < S; ++jy) {
                const double syz = f.sy[jy] * f.sz[kz];
                for (int ix = 0; ix < S; ++ix) {
                    const double s = f.sx[ix] * syz;
                    const std::uint32_t node =
                        g.node_id(f.base[0] + ix, f.base[1] + jy, f.base[2] + kz);
                    for (int c = 0; c < ncomp; ++c) (*fields[c])[node] += wq[c] * s;
                }
            }
    };
    if (gpma) {
        for (std::uint32_t cell = 0; cell < gpma->n_cells(); ++cell)
            gpma->for_each_in_cell(cell, deposit_one);
    } else {
        for (std::size_t p = 0; p < soa.size(); ++p) deposit_one(p);
    }
}

/// Reference kernel: canonical per-particle scatter of q*v*w through the
/// shape function, straight onto the grid. Ground truth for the others.
inline CurrentGrid deposit_scalar(const ParticleSoA& soa, const GridSpec& g, ShapeOrder order,
                                  const Gpma* gpma = nullptr) {
    CurrentGrid grid(g);
    std::array<std::vector<double>*, 3> fields{&grid.jx, &grid.jy, &grid.jz};
    scatter_deposit(soa, g, order, fields,
                    [&](std::size_t p, std::span<double> wq) {
                        const auto w = particle_weights(soa, p);
                        wq[0] = w[0]; wq[1] = w[1]; wq[2] = w[2];
                    },
                    gpma);
    return grid;
}

/// One-component deposition of an arbitrary per-particle quantity.
inline std::vector<double> deposit_density(const ParticleSoA& soa, const GridSpec& g,
                                           ShapeOrder order, std::span<const double> quantity) {
    std::vector<double> rho(g.n_nodes(), 0.0);
    std::array<std::vector<double>*, 1> fields{&rho};
    scatter_deposit(soa, g, order, fields,
                    [&](std::size_t p, std::span<double> wq) { wq[0] = quantity[p]; });
    return rho;
}

/// Per-particle tensor-product contributions accumulated into per-cell
/// buffers (no tile engine), then reduced. The vector-unit comparison kernel.
inline CurrentGrid deposit_rhocell_vector(const ParticleSoA& soa, const GridSpec& g,
                                          ShapeOrder order, const Gpma* gpma = nullptr,
                                          double* reduce_seconds = nullptr) {
    const int S = support(order);
    auto bufs = rhocell_alloc(g, order);
    auto deposit_one = [&](std::size_t p) {
        const ShapeFactors f = compute_shape_factors(soa.position(p), g, order);
        const auto wq = particle_weights(soa, p);
        const std::uint32_t cell = cell_of(soa.position(p), g).linear;
        std::array<std::span<double>, 3> cols{bufs[0].column(cell), bufs[1].column(cell),
                                              bufs[2].column(cell)};
        for (int kz = 0; kz < S; ++kz)
            for (int jy = 0; jy < S; ++jy) {
                const double syz = f.sy[jy] * f.sz[kz];
                for (int ix = 0; ix < S; ++ix) {
                    const double s = f.sx[ix] * syz;
                    const int n = ix + S * (jy + S * kz);
                    for (int c = 0; c < 3; ++c) cols[c][n] += wq[c] * s;
                }
            }
    };
    if (gpma) {
        for (std::uint32_t cell = 0; cell < gpma->n_cells(); ++cell)
            gpma->for_each_in_cell(cell, deposit_one);
    } else {
        for (std::size_t p = 0; p < soa.size(); ++p) deposit_one(p);
    }
    CurrentGrid grid(g);
    Timer t;
    rhocell_reduce(bufs, grid, order);
    if (reduce_seconds) *reduce_seconds = t.elapsed();
    return grid;
}

struct KernelCounters {
    std::uint64_t mopa_calls = 0;
    std::uint64_t extract_passes = 0;
};

struct StageTimes {
    double preproc = 0.0;
    double compute = 0.0;
    double reduce = 0.0;
};

/// Per-particle staging produced by the preprocessing stage: cell id, 1D
/// shape factors, and the three component weights.
struct PreprocBuffer {
    ShapeOrder order = ShapeOrder::cic;
    std::vector<std::uint32_t> cell;
    std::vector<double> sx, sy, sz; // count * support entries
    std::vector<double> wqx, wqy, wqz;

    void fill(const ParticleSoA& soa, const GridSpec& g, ShapeOrder o) {
        order = o;
        const int S = support(o);
        const std::size_t n = soa.size();
        cell.resize(n);
        sx.resize(n * S); sy.resize(n * S); sz.resize(n * S);
        wqx.resize(n); wqy.resize(n); wqz.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            const ShapeFactors f = compute_shape_factors(soa.position(p), g, o);
            const int bi = GridSpec::wrap(f.base[0] + (o == ShapeOrder::cic ? 0 : 1), g.nx);
            const int bj = GridSpec::wrap(f.base[1] + (o == ShapeOrder::cic ? 0 : 1), g.ny);
            const int bk = GridSpec::wrap(f.base[2] + (o == ShapeOrder::cic ? 0 : 1), g.nz);
            cell[p] = g.linear_id(bi, bj, bk);
            for (int i = 0; i < S; ++i) {
                sx[p * S + i] = f.sx[i];
                sy[p * S + i] = f.sy[i];
                sz[p * S + i] = f.sz[i];
            }
            const auto w = particle_weights(soa, p);
            wqx[p] = w[0]; wqy[p] = w[1]; wqz[p] = w[2];
        }
    }

    PackedParticle view(std::size_t p, int comp) const {
        const int S = support(order);
        return {comp == 0 ? wqx[p] : comp == 1 ? wqy[p] : wqz[p],
                &sx[p * S], &sy[p * S], &sz[p * S]};
    }

    std::span<const double, 4> sz_span(std::size_t p) const {
        return std::span<const double, 4>(&sz[p * 4], 4);
    }
};

inline PackedParticle ghost_particle() {
    static constexpr std::array<double, 4> s{1.0, 0.0, 0.0, 0.0};
    return {0.0, s.data(), s.data(), s.data()};
}

struct TiledOptions {
    const Gpma* gpma = nullptr; // when set, particles are streamed bin by bin
    bool residency = true;      // keep accumulator tiles resident across a cell's pairs (CIC)
    bool dual_tile = false;     // unroll pairs across two independent tiles
    KernelCounters* counters = nullptr;
};

namespace detail {

inline constexpr std::array<double, 4> kGhostSz{1.0, 0.0, 0.0, 0.0};

// One same-cell group, CIC, tiles resident across all of the group's pairs.
inline void cic_group_resident(std::span<const ParticleRef> grp, std::uint32_t cell,
                               const PreprocBuffer& pre, std::array<RhocellBuffer, 3>& bufs,
                               const TiledOptions& opt) {
    std::array<Tile, 3> tiles{};
    std::array<Tile, 3> tiles_b{};
    const std::size_t pairs = (grp.size() + 1) / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
        const PackedParticle g2 = ghost_particle();
        const bool second = opt.dual_tile && (i % 2 == 1);
        for (int c = 0; c < 3; ++c) {
            const PackedParticle v1 = pre.view(grp[2 * i], c);
            const PackedParticle v2 =
                2 * i + 1 < grp.size() ? pre.view(grp[2 * i + 1], c) : g2;
            const CicOperands op = pack_cic(v1, v2);
            mopa(second ? tiles_b[c] : tiles[c], op.a, op.b);
            if (opt.counters) ++opt.counters->mopa_calls;
        }
    }
    for (int c = 0; c < 3; ++c) {
        rhocell_add(bufs[c], cell, extract_cic(tiles[c], PairSlot::first));
        rhocell_add(bufs[c], cell, extract_cic(tiles[c], PairSlot::second));
        if (opt.counters) ++opt.counters->extract_passes;
        if (opt.dual_tile) {
            rhocell_add(bufs[c], cell, extract_cic(tiles_b[c], PairSlot::first));
            rhocell_add(bufs[c], cell, extract_cic(tiles_b[c], PairSlot::second));
            if (opt.counters) ++opt.counters->extract_passes;
        }
    }
}

// One pair, CIC, tile flushed immediately; the two particles may live in
// different cells (their blocks are independent).
inline void cic_pair_flush(ParticleRef p1, ParticleRef p2, bool has_p2, const PreprocBuffer& pre,
                           std::array<RhocellBuffer, 3>& bufs, const TiledOptions& opt) {
    for (int c = 0; c < 3; ++c) {
        Tile t;
        const PackedParticle v1 = pre.view(p1, c);
        const PackedParticle v2 = has_p2 ? pre.view(p2, c) : ghost_particle();
        const CicOperands op = pack_cic(v1, v2);
        mopa(t, op.a, op.b);
        if (opt.counters) ++opt.counters->mopa_calls;
        rhocell_add(bufs[c], pre.cell[p1], extract_cic(t, PairSlot::first));
        if (has_p2) rhocell_add(bufs[c], pre.cell[p2], extract_cic(t, PairSlot::second));
        if (opt.counters) ++opt.counters->extract_passes;
    }
}

// One pair, QSP. The finalize consumes the pair's tile (the sz factors are
// per-particle), so the tile never stays resident across pairs.
inline void qsp_pair(ParticleRef p1, ParticleRef p2, bool has_p2, const PreprocBuffer& pre,
                     std::array<RhocellBuffer, 3>& bufs, const TiledOptions& opt) {
    const std::span<const double, 4> sz1 = pre.sz_span(p1);
    const std::span<const double, 4> sz2 =
        has_p2 ? pre.sz_span(p2) : std::span<const double, 4>(kGhostSz);
    for (int c = 0; c < 3; ++c) {
        Tile t;
        const PackedParticle v1 = pre.view(p1, c);
        const PackedParticle v2 = has_p2 ? pre.view(p2, c) : ghost_particle();
        const QspOperands op = pack_qsp(v1, v2);
        mopa(t, op.a, op.b);
        if (opt.counters) ++opt.counters->mopa_calls;
        const auto blocks = qsp_finalize(t, sz1, sz2);
        rhocell_add(bufs[c], pre.cell[p1], blocks[0]);
        if (has_p2) rhocell_add(bufs[c], pre.cell[p2], blocks[1]);
        if (opt.counters) ++opt.counters->extract_passes;
    }
}

inline void tiled_group(std::span<const ParticleRef> grp, std::uint32_t cell, ShapeOrder order,
                        const PreprocBuffer& pre, std::array<RhocellBuffer, 3>& bufs,
                        const TiledOptions& opt) {
    if (order == ShapeOrder::cic && opt.residency) {
        cic_group_resident(grp, cell, pre, bufs, opt);
        return;
    }
    for (std::size_t i = 0; i < grp.size(); i += 2) {
        const bool has_p2 = i + 1 < grp.size();
        const ParticleRef p2 = has_p2 ? grp[i + 1] : grp[i];
        if (order == ShapeOrder::cic)
            cic_pair_flush(grp[i], p2, has_p2, pre, bufs, opt);
        else
            qsp_pair(grp[i], p2, has_p2, pre, bufs, opt);
    }
}

} // namespace detail

/// Three-stage deposition pipeline: staged preprocessing, outer-product
/// accumulation on the emulated tile into per-cell buffers, and a final
/// reduction onto the grid. With an index, particles stream cell by cell and
/// the CIC tiles stay resident for a whole cell; without one, consecutive
/// same-cell runs are detected opportunistically (residency on) or every pair
/// is flushed (residency off).
inline CurrentGrid deposit_tiled(const ParticleSoA& soa, const GridSpec& g, ShapeOrder order,
                                 const TiledOptions& opt = {}, StageTimes* times = nullptr) {
#ifndef NDEBUG
    if (opt.gpma) opt.gpma->validate(soa, g);
#endif
    Timer t_pre;
    PreprocBuffer pre;
    pre.fill(soa, g, order);
    if (times) times->preproc = t_pre.elapsed();

    Timer t_comp;
    auto bufs = rhocell_alloc(g, order);
    if (opt.gpma) {
        std::vector<ParticleRef> grp;
        for (std::uint32_t cell = 0; cell < opt.gpma->n_cells(); ++cell) {
            grp.clear();
            opt.gpma->for_each_in_cell(cell, [&](ParticleRef p) { grp.push_back(p); });
            if (!grp.empty()) detail::tiled_group(grp, cell, order, pre, bufs, opt);
        }
    } else if (opt.residency) {
        const std::size_t n = soa.size();
        std::vector<ParticleRef> grp;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && pre.cell[j] == pre.cell[i]) ++j;
            grp.clear();
            for (std::size_t p = i; p < j; ++p) grp.push_back(static_cast<ParticleRef>(p));
            detail::tiled_group(grp, pre.cell[i], order, pre, bufs, opt);
            i = j;
        }
    } else {
        const std::size_t n = soa.size();
        for (std::size_t i = 0; i < n; i += 2) {
            const bool has_p2 = i + 1 < n;
            const ParticleRef p1 = static_cast<ParticleRef>(i);
            const ParticleRef p2 = has_p2 ? static_cast<ParticleRef>(i + 1) : p1;
            if (order == ShapeOrder::cic)
                detail::cic_pair_flush(p1, p2, has_p2, pre, bufs, opt);
            else
                detail::qsp_pair(p1, p2, has_p2, pre, bufs, opt);
        }
    }
    if (times) times->compute = t_comp.elapsed();

    Timer t_red;
    CurrentGrid grid(g);
    rhocell_reduce(bufs, grid, order);
    if (times) times->reduce = t_red.elapsed();
    return grid;
}

/// Arithmetic tally (adds/subs/muls/divs) of the reference scalar kernel, per
/// particle, mirroring the implemented loop:
///   locate:     3 axes x (sub, div, sub)                      =   9
///   shapes:     CIC 1 op/axis; QSP 19 ops/axis                =   3 | 57
///   weights:    q*w then one multiply per component           =   4
///   accumulate: S^2 + S^3 multiplies, 3*2*S^3 fused adds      =  60 | 464
/// Used for efficiency reporting only.
constexpr int flop_count_scalar(ShapeOrder o) {
    return o == ShapeOrder::cic ? 9 + 3 + 4 + 60 : 9 + 57 + 4 + 464;
}

} // namespace pic
