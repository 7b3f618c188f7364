#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "pic/grid.hpp"
#include "pic/particles.hpp"

namespace pic {

/// Deposition scheme order. CIC spreads a particle over 2 nodes per axis
/// (8 total), QSP over 4 per axis (64 total).
enum class ShapeOrder { cic = 1, qsp = 3 };

constexpr int support(ShapeOrder o) { return o == ShapeOrder::cic ? 2 : 4; }
constexpr int nodes_per_cell(ShapeOrder o) { return o == ShapeOrder::cic ? 8 : 64; }

namespace detail {
inline void check_unit_interval(double d) {
    if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("shape: coordinate outside [0,1)");
}
} // namespace detail

/// First-order (trilinear) weights for the node pair {i, i+1}.
inline std::array<double, 2> cic_shape_1d(double d) {
    detail::check_unit_interval(d);
    return {1.0 - d, d};
}

/// Third-order weights: uniform cubic B-spline over the node stencil
/// {i-1, i, i+1, i+2}. Non-negative, sums to 1, C2 across cell boundaries.
inline std::array<double, 4> qsp_shape_1d(double d) {
    detail::check_unit_interval(d);
    const double t = d;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double u = 1.0 - t;
    return {u * u * u * (1.0 / 6.0),
            (3.0 * t3 - 6.0 * t2 + 4.0) * (1.0 / 6.0),
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) * (1.0 / 6.0),
            t3 * (1.0 / 6.0)};
}

/// Per-component deposited quantity of one particle: w_c = q * v_c * W.
inline std::array<double, 3> particle_weights(double q, double macro_weight,
                                              double vx, double vy, double vz) {
    const double qw = q * macro_weight;
    return {qw * vx, qw * vy, qw * vz};
}

inline std::array<double, 3> particle_weights(const ParticleSoA& soa, std::size_t p) {
    return particle_weights(soa.q, soa.w[p], soa.vx[p], soa.vy[p], soa.vz[p]);
}

/// Per-particle 1D shape factors for all three axes plus the lowest supported
/// node per axis (unwrapped; periodic wrap is applied at deposition time).
struct ShapeFactors {
    std::array<double, 4> sx{}, sy{}, sz{};
    std::array<int, 3> base{};
    int width = 2;
};

inline ShapeFactors compute_shape_factors(const Vec3& pos, const GridSpec& g, ShapeOrder order) {
    if (!std::isfinite(pos[0]) || !std::isfinite(pos[1]) || !std::isfinite(pos[2]))
        throw std::invalid_argument("shape factors: non-finite particle position");
    const auto ax = detail::locate_axis(pos[0], g.origin[0], g.dx, g.nx);
    const auto ay = detail::locate_axis(pos[1], g.origin[1], g.dy, g.ny);
    const auto az = detail::locate_axis(pos[2], g.origin[2], g.dz, g.nz);
    ShapeFactors f;
    f.width = support(order);
    if (order == ShapeOrder::cic) {
        const auto sx = cic_shape_1d(ax.frac), sy = cic_shape_1d(ay.frac), sz = cic_shape_1d(az.frac);
        f.sx = {sx[0], sx[1], 0.0, 0.0};
        f.sy = {sy[0], sy[1], 0.0, 0.0};
        f.sz = {sz[0], sz[1], 0.0, 0.0};
        f.base = {ax.cell, ay.cell, az.cell};
    } else {
        f.sx = qsp_shape_1d(ax.frac);
        f.sy = qsp_shape_1d(ay.frac);
        f.sz = qsp_shape_1d(az.frac);
        f.base = {ax.cell - 1, ay.cell - 1, az.cell - 1};
    }
    return f;
}

} // namespace pic
