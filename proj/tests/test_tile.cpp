#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "pic/rng.hpp"
#include "pic/shape.hpp"
#include "pic/tile.hpp"

using namespace pic;

namespace {

// Independent accumulate used to pin the tile contract.
void naive_outer_accumulate(std::array<std::array<double, 8>, 8>& c, std::span<const double> a,
                            std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i][j] += a[i] * b[j];
}

struct TestParticle {
    double w;
    std::array<double, 4> sx, sy, sz;
};

TestParticle random_particle(std::uint64_t seed, std::uint64_t t, ShapeOrder order) {
    TestParticle p;
    p.w = 2.0 * uniform01(seed, t, 10) - 1.0;
    const double dx = uniform01(seed, t, 0), dy = uniform01(seed, t, 1), dz = uniform01(seed, t, 2);
    if (order == ShapeOrder::cic) {
        const auto sx = cic_shape_1d(dx), sy = cic_shape_1d(dy), sz = cic_shape_1d(dz);
        p.sx = {sx[0], sx[1], 0, 0};
        p.sy = {sy[0], sy[1], 0, 0};
        p.sz = {sz[0], sz[1], 0, 0};
    } else {
        p.sx = qsp_shape_1d(dx);
        p.sy = qsp_shape_1d(dy);
        p.sz = qsp_shape_1d(dz);
    }
    return p;
}

PackedParticle view(const TestParticle& p) { return {p.w, p.sx.data(), p.sy.data(), p.sz.data()}; }

} // namespace

TEST_CASE("tile_zero and additive identity") {
    Tile t = tile_zero();
    for (auto& row : t.c)
        for (double v : row) CHECK(v == 0.0);

    const std::array<double, 2> a{1.0, 0.0};
    const std::array<double, 2> b{0.0, 1.0};
    mopa(t, a, b);
    CHECK(t.c[0][1] == 1.0);
    double sum = 0;
    for (auto& row : t.c)
        for (double v : row) sum += v;
    CHECK(sum == 1.0);
}

TEST_CASE("mopa: hand-computed 2x2, accumulation, and lane limits") {
    Tile t = tile_zero();
    const std::array<double, 2> a{0.75, 0.25};
    const std::array<double, 2> b{0.5, 0.5};
    mopa(t, a, b);
    CHECK(t.c[0][0] == 0.375);
    CHECK(t.c[0][1] == 0.375);
    CHECK(t.c[1][0] == 0.125);
    CHECK(t.c[1][1] == 0.125);
    CHECK(t.c[2][2] == 0.0);

    Tile twice = tile_zero();
    mopa(twice, a, b);
    mopa(twice, a, b);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(twice.c[i][j] == 2.0 * t.c[i][j]);

    const std::vector<double> nine(9, 1.0);
    CHECK_THROWS_AS(mopa(t, nine, b), std::invalid_argument);
    CHECK_THROWS_AS(mopa(t, a, nine), std::invalid_argument);
}

TEST_CASE("mopa equals the naive double loop bitwise on random operands") {
    for (int t = 0; t < 10000; ++t) {
        const std::size_t na = 1 + hash_combine(3, t, 0) % 8;
        const std::size_t nb = 1 + hash_combine(3, t, 1) % 8;
        std::vector<double> a(na), b(nb);
        for (std::size_t i = 0; i < na; ++i) a[i] = 2.0 * uniform01(3, t, 100 + i) - 1.0;
        for (std::size_t j = 0; j < nb; ++j) b[j] = 2.0 * uniform01(3, t, 200 + j) - 1.0;
        Tile tile = tile_zero();
        std::array<std::array<double, 8>, 8> ref{};
        mopa(tile, a, b);
        naive_outer_accumulate(ref, a, b);
        // second accumulation pass as well
        mopa(tile, a, b);
        naive_outer_accumulate(ref, a, b);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) CHECK(tile.c[i][j] == ref[i][j]);
    }
}

TEST_CASE("cic packing: operand layout and partition of unity of b") {
    const auto p1 = random_particle(5, 1, ShapeOrder::cic);
    const auto p2 = random_particle(5, 2, ShapeOrder::cic);
    const auto op = pack_cic(view(p1), view(p2));

    CHECK(op.a[0] == p1.w * p1.sx[0]);
    CHECK(op.a[1] == p1.w * p1.sx[1]);
    CHECK(op.a[2] == p2.w * p2.sx[0]);
    CHECK(op.a[3] == p2.w * p2.sx[1]);

    const double b1 = op.b[0] + op.b[1] + op.b[2] + op.b[3];
    const double b2 = op.b[4] + op.b[5] + op.b[6] + op.b[7];
    CHECK(b1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b2 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cic extraction equals the scalar triple product") {
    for (int t = 0; t < 2000; ++t) {
        const auto p1 = random_particle(7, 2 * t, ShapeOrder::cic);
        const auto p2 = random_particle(7, 2 * t + 1, ShapeOrder::cic);
        Tile tile = tile_zero();
        const auto op = pack_cic(view(p1), view(p2));
        mopa(tile, op.a, op.b);
        const CicBlock e1 = extract_cic(tile, PairSlot::first);
        const CicBlock e2 = extract_cic(tile, PairSlot::second);
        for (int kz = 0; kz < 2; ++kz)
            for (int jy = 0; jy < 2; ++jy)
                for (int ix = 0; ix < 2; ++ix) {
                    const int n = ix + 2 * (jy + 2 * kz);
                    const double want1 = p1.w * p1.sx[ix] * p1.sy[jy] * p1.sz[kz];
                    const double want2 = p2.w * p2.sx[ix] * p2.sy[jy] * p2.sz[kz];
                    CHECK(e1[n] == doctest::Approx(want1).epsilon(1e-15));
                    CHECK(e2[n] == doctest::Approx(want2).epsilon(1e-15));
                }
        // weight-scaled partition of unity per particle
        double s1 = 0, s2 = 0;
        for (int n = 0; n < 8; ++n) {
            s1 += e1[n];
            s2 += e2[n];
        }
        CHECK(s1 == doctest::Approx(p1.w).epsilon(1e-13));
        CHECK(s2 == doctest::Approx(p2.w).epsilon(1e-13));
    }
}

TEST_CASE("ghost padding: a zero-weight companion contributes nothing") {
    const auto p1 = random_particle(9, 4, ShapeOrder::cic);
    const PackedParticle ghost{0.0, p1.sx.data(), p1.sy.data(), p1.sz.data()};
    Tile tile = tile_zero();
    const auto op = pack_cic(view(p1), ghost);
    CHECK(op.a[2] == 0.0);
    CHECK(op.a[3] == 0.0);
    mopa(tile, op.a, op.b);
    const CicBlock e2 = extract_cic(tile, PairSlot::second);
    for (double v : e2) CHECK(v == 0.0);
    const CicBlock e1 = extract_cic(tile, PairSlot::first);
    double s = 0;
    for (double v : e1) s += v;
    CHECK(s == doctest::Approx(p1.w).epsilon(1e-13));
}

TEST_CASE("particle at cell center spreads 1/8 of its weight per node") {
    TestParticle p;
    p.w = 1.0;
    const auto s = cic_shape_1d(0.5);
    p.sx = {s[0], s[1], 0, 0};
    p.sy = p.sx;
    p.sz = p.sx;
    Tile tile = tile_zero();
    const auto op = pack_cic(view(p), view(p));
    mopa(tile, op.a, op.b);
    const CicBlock e = extract_cic(tile, PairSlot::first);
    for (double v : e) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("cross-term independence: perturbing one particle never leaks into the other") {
    const auto p1 = random_particle(11, 1, ShapeOrder::cic);
    auto p2 = random_particle(11, 2, ShapeOrder::cic);

    Tile t1 = tile_zero();
    const auto op1 = pack_cic(view(p1), view(p2));
    mopa(t1, op1.a, op1.b);
    const CicBlock before = extract_cic(t1, PairSlot::first);

    p2.w *= -3.7;
    p2.sy[0] += 0.25;
    Tile t2 = tile_zero();
    const auto op2 = pack_cic(view(p1), view(p2));
    mopa(t2, op2.a, op2.b);
    const CicBlock after = extract_cic(t2, PairSlot::first);

    for (int n = 0; n < 8; ++n) CHECK(before[n] == after[n]);
}

TEST_CASE("qsp packing: diagonal blocks valid, finalize matches the scalar oracle") {
    for (int t = 0; t < 1000; ++t) {
        const auto p1 = random_particle(13, 2 * t, ShapeOrder::qsp);
        const auto p2 = random_particle(13, 2 * t + 1, ShapeOrder::qsp);
        Tile tile = tile_zero();
        const auto op = pack_qsp(view(p1), view(p2));
        mopa(tile, op.a, op.b);
        const auto blocks = qsp_finalize(tile, std::span<const double, 4>(p1.sz),
                                         std::span<const double, 4>(p2.sz));
        double sum1 = 0, sum2 = 0;
        for (int kz = 0; kz < 4; ++kz)
            for (int jy = 0; jy < 4; ++jy)
                for (int ix = 0; ix < 4; ++ix) {
                    const int n = ix + 4 * (jy + 4 * kz);
                    const double want1 = p1.w * p1.sx[ix] * p1.sy[jy] * p1.sz[kz];
                    const double want2 = p2.w * p2.sx[ix] * p2.sy[jy] * p2.sz[kz];
                    CHECK(std::abs(blocks[0][n] - want1) <=
                          1e-15 * std::max(1.0, std::abs(want1)));
                    CHECK(std::abs(blocks[1][n] - want2) <=
                          1e-15 * std::max(1.0, std::abs(want2)));
                    sum1 += blocks[0][n];
                    sum2 += blocks[1][n];
                }
        CHECK(sum1 == doctest::Approx(p1.w).epsilon(1e-12));
        CHECK(sum2 == doctest::Approx(p2.w).epsilon(1e-12));
    }
}

TEST_CASE("qsp finalize with a selector sz picks one slab") {
    const auto p1 = random_particle(15, 1, ShapeOrder::qsp);
    const auto p2 = random_particle(15, 2, ShapeOrder::qsp);
    Tile tile = tile_zero();
    const auto op = pack_qsp(view(p1), view(p2));
    mopa(tile, op.a, op.b);
    const std::array<double, 4> sel{0.0, 1.0, 0.0, 0.0};
    const auto blocks =
        qsp_finalize(tile, std::span<const double, 4>(sel), std::span<const double, 4>(p2.sz));
    for (int kz = 0; kz < 4; ++kz)
        for (int jy = 0; jy < 4; ++jy)
            for (int ix = 0; ix < 4; ++ix) {
                const int n = ix + 4 * (jy + 4 * kz);
                if (kz == 1)
                    CHECK(blocks[0][n] == tile.c[ix][jy]);
                else
                    CHECK(blocks[0][n] == 0.0);
            }
}
