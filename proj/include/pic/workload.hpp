#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "pic/grid.hpp"
#include "pic/particles.hpp"
#include "pic/rng.hpp"
#include "pic/shape.hpp"

namespace pic {

enum class WorkloadKind { uniform_plasma, drift_gradient };

struct WorkloadConfig {
    GridSpec grid;
    int ppc = 8;
    WorkloadKind kind = WorkloadKind::uniform_plasma;
    double thermal_speed = 0.01;
    Vec3 drift_velocity{0.0, 0.0, 0.0}; // drift_gradient only; zero selects the default amplitude
    std::uint64_t seed = 1;
    int steps = 10;
    double dt = 1.0;
    double charge = 1.0;
    ShapeOrder order = ShapeOrder::cic;

    void validate() const {
        grid.validate();
        if (ppc < 1) throw std::invalid_argument("workload: ppc must be >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("workload: dt must be positive");
        if (steps < 0) throw std::invalid_argument("workload: steps must be >= 0");
        if (thermal_speed < 0.0) throw std::invalid_argument("workload: thermal_speed must be >= 0");
        const int s = support(order);
        if (grid.nx < s || grid.ny < s || grid.nz < s)
            throw std::invalid_argument("workload: grid smaller than the shape stencil");
    }

    // Single-cell displacement cap: fastest particle may move at most one
    // (minimum) cell edge per step. Premise of the incremental sort.
    double speed_cap() const { return grid.min_spacing() / dt; }
};

namespace detail {

// Balanced per-axis factorization px >= py >= pz with px*py*pz == ppc, for
// placing ppc particles on a regular sub-lattice inside each cell.
inline std::array<int, 3> sublattice_dims(int ppc) {
    int cbrt = 1;
    while ((cbrt + 1) * (cbrt + 1) * (cbrt + 1) <= ppc) ++cbrt;
    int pz = 1;
    for (int d = cbrt; d >= 1; --d)
        if (ppc % d == 0) { pz = d; break; }
    const int rem = ppc / pz;
    int sqrt = 1;
    while ((sqrt + 1) * (sqrt + 1) <= rem) ++sqrt;
    int py = 1;
    for (int d = sqrt; d >= 1; --d)
        if (rem % d == 0) { py = d; break; }
    return {rem / py, py, pz};
}

} // namespace detail

inline constexpr std::size_t kMaxParticles = std::size_t{1} << 28;

/// Builds the particle population for a workload. uniform_plasma places ppc
/// particles per cell on a regular sub-lattice with Maxwellian velocities.
/// drift_gradient additionally applies an incompressible shear drift (each
/// velocity component modulated along the next axis), so a tunable fraction
/// of particles crosses a cell boundary every step while the density stays
/// uniform. Deterministic given the seed.
inline ParticleSoA make_workload(const WorkloadConfig& cfg) {
    cfg.validate();
    const GridSpec& g = cfg.grid;
    const std::size_t total = static_cast<std::size_t>(g.n_cells()) * static_cast<std::size_t>(cfg.ppc);
    if (cfg.ppc != 0 && total / static_cast<std::size_t>(cfg.ppc) != g.n_cells())
        throw std::length_error("make_workload: particle count overflows");
    if (total > kMaxParticles) throw std::length_error("make_workload: particle count exceeds capacity");

    const auto [px, py, pz] = detail::sublattice_dims(cfg.ppc);
    ParticleSoA soa;
    soa.resize(total);
    soa.q = cfg.charge;

    const double cap = cfg.speed_cap();
    Vec3 amp = cfg.drift_velocity;
    if (cfg.kind == WorkloadKind::drift_gradient && amp[0] == 0.0 && amp[1] == 0.0 && amp[2] == 0.0)
        amp[0] = 0.5 * cap;

    std::size_t pid = 0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                for (int c = 0; c < pz; ++c)
                    for (int b = 0; b < py; ++b)
                        for (int a = 0; a < px; ++a, ++pid) {
                            const double X = g.origin[0] + (i + (a + 0.5) / px) * g.dx;
                            const double Y = g.origin[1] + (j + (b + 0.5) / py) * g.dy;
                            const double Z = g.origin[2] + (k + (c + 0.5) / pz) * g.dz;
                            soa.x[pid] = X; soa.y[pid] = Y; soa.z[pid] = Z;
                            double VX = cfg.thermal_speed * gaussian(cfg.seed, pid, 0);
                            double VY = cfg.thermal_speed * gaussian(cfg.seed, pid, 1);
                            double VZ = cfg.thermal_speed * gaussian(cfg.seed, pid, 2);
                            if (cfg.kind == WorkloadKind::drift_gradient) {
                                constexpr double tau = 2.0 * std::numbers::pi;
                                VX += amp[0] * std::cos(tau * (Y - g.origin[1]) / g.length(1));
                                VY += amp[1] * std::cos(tau * (Z - g.origin[2]) / g.length(2));
                                VZ += amp[2] * std::cos(tau * (X - g.origin[0]) / g.length(0));
                            }
                            // Truncate the Maxwellian tail at the displacement cap.
                            const double speed = std::sqrt(VX * VX + VY * VY + VZ * VZ);
                            if (speed > cap) {
                                const double s = cap / speed * (1.0 - 0x1.0p-40);
                                VX *= s; VY *= s; VZ *= s;
                            }
                            soa.vx[pid] = VX; soa.vy[pid] = VY; soa.vz[pid] = VZ;
                            soa.w[pid] = 1.0;
                            soa.id[pid] = pid;
                        }
    return soa;
}

namespace detail {

inline double wrap_position(double x, double origin, double length) {
    double r = x - length * std::floor((x - origin) / length);
    if (r - origin >= length) r = origin; // FP rounding at the upper edge
    return r;
}

} // namespace detail

/// Ballistic move x += v*dt with periodic wrap. Returns the fraction of
/// particles whose linear cell id changed. Throws std::domain_error if any
/// particle would move farther than one minimum cell edge.
inline double advance(ParticleSoA& soa, double dt, const GridSpec& g) {
    const std::size_t n = soa.size();
    if (n == 0) return 0.0;
    const double cap2 = (g.min_spacing() / dt) * (g.min_spacing() / dt);
    std::size_t moved = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const double v2 = soa.vx[p] * soa.vx[p] + soa.vy[p] * soa.vy[p] + soa.vz[p] * soa.vz[p];
        if (v2 > cap2)
            throw std::domain_error("advance: particle displacement exceeds the single-cell cap");
        const std::uint32_t before = cell_of(soa.position(p), g).linear;
        soa.x[p] = detail::wrap_position(soa.x[p] + soa.vx[p] * dt, g.origin[0], g.length(0));
        soa.y[p] = detail::wrap_position(soa.y[p] + soa.vy[p] * dt, g.origin[1], g.length(1));
        soa.z[p] = detail::wrap_position(soa.z[p] + soa.vz[p] * dt, g.origin[2], g.length(2));
        if (cell_of(soa.position(p), g).linear != before) ++moved;
    }
    return static_cast<double>(moved) / static_cast<double>(n);
}

} // namespace pic
