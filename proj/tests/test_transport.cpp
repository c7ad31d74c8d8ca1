#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testing.hpp"
#include "voltrans/potential.hpp"
#include "voltrans/transport.hpp"

using namespace voltrans;
using namespace voltrans::testing;

namespace {

// per-cell backtrace-and-interpolate, written independently of the library path
ScalarGrid advect_oracle(const ScalarGrid& rho, const VectorGrid& u, double dt) {
    ScalarGrid out(rho.res);
    for (int k = 0; k < rho.res.nz; ++k)
        for (int j = 0; j < rho.res.ny; ++j)
            for (int i = 0; i < rho.res.nx; ++i) {
                const Vec3 x = rho.res.cell_center(i, j, k);
                const Vec3 v = u.vec_at(i, j, k);
                out.at(i, j, k) = sample_trilinear(rho, x - dt * v);
            }
    return out;
}

ScalarGrid gaussian_blob(const GridDims& res, Vec3 center, double sigma) {
    ScalarGrid g(res);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i) {
                const Vec3 d = res.cell_center(i, j, k) - center;
                g.at(i, j, k) = std::exp(-dot(d, d) * inv);
            }
    return g;
}

double rmse(const ScalarGrid& a, const ScalarGrid& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.data.size(); ++n) {
        const double d = a.data[n] - b.data[n];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.data.size()));
}

// instance without clamp-boundary or cell-face kinks, for finite differences
void conditioned_instance(GridDims res, std::uint64_t seed, ScalarGrid& rho, VectorGrid& u) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed + attempt * 1000003ULL);
        rho = smooth_scalar(res, rng, 1.0);
        u = smooth_vector(res, rng, 0.3);
        MacCormackStats stats;
        (void)advect_maccormack(rho, u, 1.0, &stats);
        if (stats.clamped_cells == 0 && stats.min_clamp_margin > 1e-4 &&
            stats.min_face_distance > 1e-3)
            return;
        REQUIRE(attempt < 64);
    }
}

} // namespace

TEST_CASE("zero velocity advection is the exact identity") {
    Rng rng(21);
    const ScalarGrid rho = random_scalar(GridDims{5, 4, 6}, rng);
    const VectorGrid u(rho.res);
    const ScalarGrid sl = advect_sl(rho, u);
    const ScalarGrid mc = advect_maccormack(rho, u);
    for (std::size_t n = 0; n < rho.data.size(); ++n) {
        CHECK(sl.data[n] == rho.data[n]);
        CHECK(mc.data[n] == rho.data[n]);
    }
}

TEST_CASE("unit-cell translation shifts interior cells exactly") {
    GridDims res{8, 4, 4};
    ScalarGrid f(res);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 8; ++i) f.at(i, j, k) = static_cast<double>(i);
    const VectorGrid u(res, Vec3{1, 0, 0});
    const ScalarGrid out = advect_sl(f, u, 1.0);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 1; i < 8; ++i) CHECK(out.at(i, j, k) == f.at(i - 1, j, k));
}

TEST_CASE("semi-Lagrangian advection matches the backtrace oracle") {
    Rng rng(1001);
    const GridDims res{6, 6, 6};
    const ScalarGrid rho = random_scalar(res, rng);
    const VectorGrid u = random_vector(res, rng, -1.0, 1.0);
    const ScalarGrid out = advect_sl(rho, u, 1.0);
    const ScalarGrid ref = advect_oracle(rho, u, 1.0);
    CHECK(max_abs_diff(out.data, ref.data) < 1e-14);
}

TEST_CASE("advection mismatch raises") {
    const ScalarGrid rho(GridDims{4, 4, 4});
    const VectorGrid u(GridDims{4, 4, 5});
    CHECK_THROWS_AS(advect_sl(rho, u), ShapeError);
    CHECK_THROWS_AS(advect_maccormack(rho, u), ShapeError);
}

TEST_CASE("MacCormack keeps constants exactly") {
    Rng rng(33);
    const GridDims res{6, 5, 4};
    const ScalarGrid rho(res, 3.25);
    const VectorGrid u = random_vector(res, rng, -0.9, 0.9);
    const ScalarGrid out = advect_maccormack(rho, u);
    for (double v : out.data) CHECK(v == 3.25);
}

TEST_CASE("advection output stays within the input range") {
    Rng rng(55);
    const GridDims res{6, 6, 6};
    const ScalarGrid rho = random_scalar(res, rng, 0.0, 2.0);
    const VectorGrid u = random_vector(res, rng, -1.0, 1.0);
    const double lo = min_value(rho), hi = max_value(rho);
    const double slack = 1e-13 * (hi - lo);
    for (double v : advect_sl(rho, u).data) {
        CHECK(v >= lo - slack);
        CHECK(v <= hi + slack);
    }
    // the limiter clamps onto stored corner values, no slack needed
    for (double v : advect_maccormack(rho, u).data) {
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("MacCormack beats semi-Lagrangian on a smooth translation") {
    const GridDims res{48, 48, 48};
    const Vec3 start{16.0, 24.0, 24.0};
    const Vec3 speed{0.5, 0.0, 0.0};
    const double sigma = 4.0;
    ScalarGrid sl = gaussian_blob(res, start, sigma);
    ScalarGrid mc = sl;
    const VectorGrid u(res, speed);
    const int steps = 10;
    for (int t = 0; t < steps; ++t) {
        sl = advect_sl(sl, u);
        mc = advect_maccormack(mc, u);
    }
    const ScalarGrid ref = gaussian_blob(res, start + static_cast<double>(steps) * speed, sigma);
    const double err_sl = rmse(sl, ref);
    const double err_mc = rmse(mc, ref);
    CHECK(err_mc < err_sl);
    CHECK(err_mc > 0.0);
}

TEST_CASE("advect_sequence composes MacCormack steps") {
    Rng rng(77);
    const GridDims res{6, 6, 6};
    const ScalarGrid rho0 = random_scalar(res, rng);
    std::vector<VectorGrid> vels;
    for (int t = 0; t < 3; ++t) vels.push_back(smooth_vector(res, rng, 0.4));

    SUBCASE("single step equals one MacCormack call") {
        const auto frames = advect_sequence(rho0, {vels[0]});
        const ScalarGrid direct = advect_maccormack(rho0, vels[0]);
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].data == direct.data);
    }
    SUBCASE("zero velocities keep every frame equal to the input") {
        const std::vector<VectorGrid> zeros(3, VectorGrid(res));
        for (const ScalarGrid& f : advect_sequence(rho0, zeros)) CHECK(f.data == rho0.data);
    }
    SUBCASE("three steps equal the manual nesting bit-exactly") {
        const auto frames = advect_sequence(rho0, vels);
        ScalarGrid manual = advect_maccormack(advect_maccormack(advect_maccormack(rho0, vels[0]),
                                                                vels[1]),
                                              vels[2]);
        REQUIRE(frames.size() == 3);
        CHECK(frames[2].data == manual.data);
    }
}

TEST_CASE("zero-velocity adjoint is the identity on the density gradient") {
    Rng rng(31);
    const GridDims res{5, 5, 5};
    const ScalarGrid rho = smooth_scalar(res, rng);
    const VectorGrid u(res);
    const ScalarGrid gout = random_scalar(res, rng, -1.0, 1.0);
    const AdvectGrads g_sl = advect_sl_adjoint(gout, rho, u);
    const AdvectGrads g_mc = advect_maccormack_adjoint(gout, rho, u);
    CHECK(g_sl.rho.data == gout.data);
    CHECK(g_mc.rho.data == gout.data);
}

TEST_CASE("advection adjoints agree with central finite differences") {
    const GridDims res{5, 5, 5};
    ScalarGrid rho;
    VectorGrid u;
    conditioned_instance(res, 2024, rho, u);
    Rng rng(8);
    const ScalarGrid weights = random_scalar(res, rng, -1.0, 1.0);
    const double h = 1e-5;

    for (int scheme = 0; scheme < 2; ++scheme) {
        auto forward = [&](const ScalarGrid& r, const VectorGrid& v) {
            const ScalarGrid out = scheme ? advect_maccormack(r, v) : advect_sl(r, v);
            return dot_flat(out.data, weights.data);
        };
        const AdvectGrads grads = scheme ? advect_maccormack_adjoint(weights, rho, u)
                                         : advect_sl_adjoint(weights, rho, u);
        double max_rel = 0.0;
        Rng pick(scheme + 100);
        for (int s = 0; s < 48; ++s) {
            ScalarGrid r = rho;
            VectorGrid v = u;
            double analytic;
            double* slot;
            if (s % 2 == 0) {
                const std::size_t idx = pick.below(r.data.size());
                slot = &r.data[idx];
                analytic = grads.rho.data[idx];
            } else {
                const std::size_t idx = pick.below(v.data.size());
                slot = &v.data[idx];
                analytic = grads.u.data[idx];
            }
            const double x0 = *slot;
            *slot = x0 + h;
            const double fp = forward(r, v);
            *slot = x0 - h;
            const double fm = forward(r, v);
            const double numeric = (fp - fm) / (2 * h);
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
        CHECK(max_rel < 1e-6);
    }
}

TEST_CASE("advection adjoints pass the dot-product test") {
    Rng rng(606);
    const GridDims res{5, 6, 5};
    const ScalarGrid rho = random_scalar(res, rng);
    const VectorGrid u = random_vector(res, rng, -0.8, 0.8);
    const ScalarGrid drho = random_scalar(res, rng, -1.0, 1.0);
    const VectorGrid du = random_vector(res, rng, -1.0, 1.0);
    const ScalarGrid y = random_scalar(res, rng, -1.0, 1.0);

    SUBCASE("semi-Lagrangian") {
        const ScalarGrid jvp = advect_sl_jvp(rho, u, drho, du);
        const AdvectGrads adj = advect_sl_adjoint(y, rho, u);
        const double lhs = dot_flat(jvp.data, y.data);
        const double rhs = dot_flat(drho.data, adj.rho.data) + dot_flat(du.data, adj.u.data);
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    SUBCASE("MacCormack") {
        const ScalarGrid jvp = advect_maccormack_jvp(rho, u, drho, du);
        const AdvectGrads adj = advect_maccormack_adjoint(y, rho, u);
        const double lhs = dot_flat(jvp.data, y.data);
        const double rhs = dot_flat(drho.data, adj.rho.data) + dot_flat(du.data, adj.u.data);
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}
