#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pic/grid.hpp"

namespace pic {

/// Structure-of-arrays particle store. All arrays share the same length;
/// q is the per-species macro-particle charge.
struct ParticleSoA {
    std::vector<double> x, y, z;
    std::vector<double> vx, vy, vz;
    std::vector<double> w;
    std::vector<std::uint64_t> id;
    double q = 1.0;

    std::size_t size() const { return x.size(); }

    void resize(std::size_t n) {
        x.resize(n); y.resize(n); z.resize(n);
        vx.resize(n); vy.resize(n); vz.resize(n);
        w.resize(n); id.resize(n);
    }

    Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }
    Vec3 velocity(std::size_t i) const { return {vx[i], vy[i], vz[i]}; }

    /// Physically reorders every array: entry i of the result is entry
    /// perm[i] of the input.
    void apply_permutation(std::span<const std::uint32_t> perm) {
        if (perm.size() != size()) throw std::invalid_argument("apply_permutation: size mismatch");
        permute(x, perm); permute(y, perm); permute(z, perm);
        permute(vx, perm); permute(vy, perm); permute(vz, perm);
        permute(w, perm); permute(id, perm);
    }

private:
    template <class T>
    static void permute(std::vector<T>& a, std::span<const std::uint32_t> perm) {
        std::vector<T> out(a.size());
        for (std::size_t i = 0; i < perm.size(); ++i) out[i] = a[perm[i]];
        a.swap(out);
    }
};

} // namespace pic
