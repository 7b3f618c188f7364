#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace pic {

inline constexpr int kTileWidth = 8;

/// Emulated outer-product-accumulate register tile, 8x8 FP64. The emulator is
/// the plain double loop; this pins the contract for any optimized backend.
struct Tile {
    std::array<std::array<double, kTileWidth>, kTileWidth> c{};
};

inline Tile tile_zero() { return Tile{}; }

/// C[i][j] += a[i]*b[j]. Operands shorter than the tile leave the remaining
/// rows/columns untouched; operands longer than the tile exceed the hardware
/// width and are rejected.
inline void mopa(Tile& t, std::span<const double> a, std::span<const double> b) {
    if (a.size() > kTileWidth || b.size() > kTileWidth)
        throw std::invalid_argument("mopa: operand exceeds tile width");
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            t.c[i][j] += a[i] * b[j];
}

using CicBlock = std::array<double, 8>;
using QspBlock = std::array<double, 64>;

/// One particle's staged operand data for a single current component:
/// the component weight w = q*v_c*W and the per-axis 1D shape factors.
struct PackedParticle {
    double w = 0.0;
    const double* sx = nullptr;
    const double* sy = nullptr;
    const double* sz = nullptr;
};

struct CicOperands {
    std::array<double, 4> a{};
    std::array<double, 8> b{};
};

struct QspOperands {
    std::array<double, 8> a{};
    std::array<double, 8> b{};
};

/// Two-particle CIC packing: a = [w1*sx0, w1*sx1, w2*sx0, w2*sx1],
/// b = [sy*sz products of p1 | of p2], y index fastest. A single mopa yields
/// p1's 8 contributions in rows 0-1 x cols 0-3 and p2's in rows 2-3 x cols
/// 4-7; the off-diagonal blocks are cross-terms and are never read.
inline CicOperands pack_cic(const PackedParticle& p1, const PackedParticle& p2) {
    CicOperands op;
    op.a = {p1.w * p1.sx[0], p1.w * p1.sx[1], p2.w * p2.sx[0], p2.w * p2.sx[1]};
    op.b = {p1.sy[0] * p1.sz[0], p1.sy[1] * p1.sz[0], p1.sy[0] * p1.sz[1], p1.sy[1] * p1.sz[1],
            p2.sy[0] * p2.sz[0], p2.sy[1] * p2.sz[0], p2.sy[0] * p2.sz[1], p2.sy[1] * p2.sz[1]};
    return op;
}

enum class PairSlot { first, second };

/// Reads one particle's valid 2x4 block out of an accumulated CIC tile.
/// Output ordering: x node fastest, then y, then z.
inline CicBlock extract_cic(const Tile& t, PairSlot which) {
    const int r = which == PairSlot::first ? 0 : 2;
    const int col = which == PairSlot::first ? 0 : 4;
    CicBlock out;
    for (int kz = 0; kz < 2; ++kz)
        for (int jy = 0; jy < 2; ++jy)
            for (int ix = 0; ix < 2; ++ix)
                out[ix + 2 * (jy + 2 * kz)] = t.c[r + ix][col + jy + 2 * kz];
    return out;
}

/// Two-particle QSP packing: a = [w1*sx(0..3) | w2*sx(0..3)],
/// b = [sy(0..3) of p1 | of p2]. Only the two diagonal 4x4 blocks of the
/// resulting 8x8 tile are valid; the rest are cross-terms.
inline QspOperands pack_qsp(const PackedParticle& p1, const PackedParticle& p2) {
    QspOperands op;
    for (int i = 0; i < 4; ++i) {
        op.a[i] = p1.w * p1.sx[i];
        op.a[4 + i] = p2.w * p2.sx[i];
        op.b[i] = p1.sy[i];
        op.b[4 + i] = p2.sy[i];
    }
    return op;
}

/// Finalize for the third-order scheme: each particle's diagonal 4x4 block
/// (w*sx x sy) is multiplied by its four sz values, producing 64 contributions
/// ordered x fastest, then y, then z. Cross blocks are discarded.
inline std::array<QspBlock, 2> qsp_finalize(const Tile& t, std::span<const double, 4> sz1,
                                            std::span<const double, 4> sz2) {
    std::array<QspBlock, 2> out{};
    for (int kz = 0; kz < 4; ++kz)
        for (int jy = 0; jy < 4; ++jy)
            for (int ix = 0; ix < 4; ++ix) {
                const int n = ix + 4 * (jy + 4 * kz);
                out[0][n] = t.c[ix][jy] * sz1[kz];
                out[1][n] = t.c[4 + ix][4 + jy] * sz2[kz];
            }
    return out;
}

} // namespace pic
