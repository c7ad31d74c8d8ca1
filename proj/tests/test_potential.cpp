#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testing.hpp"
#include "voltrans/eval.hpp"
#include "voltrans/potential.hpp"

using namespace voltrans;
using namespace voltrans::testing;

namespace {

// quadratic B-spline kernel, for the direct tensor-product oracle
double b2(double t) {
    t = std::abs(t);
    if (t <= 0.5) return 0.75 - t * t;
    if (t <= 1.5) return 0.5 * (1.5 - t) * (1.5 - t);
    return 0.0;
}

} // namespace

TEST_CASE("curl of a constant potential vanishes") {
    const VectorGrid P(GridDims{5, 5, 5}, Vec3{3.0, -2.0, 7.0});
    for (double v : curl(P).data) CHECK(v == 0.0);
}

TEST_CASE("curl of a bilinear potential matches the analytic field") {
    // P = (0, 0, x*y) gives u = (x, -y, 0); differences are exact on it
    const GridDims res{6, 5, 4};
    VectorGrid P(res);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i)
                P.at(i, j, k, 2) = (i + 0.5) * (j + 0.5);
    const VectorGrid u = curl(P);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i) {
                CHECK(u.at(i, j, k, 0) == doctest::Approx(i + 0.5).epsilon(1e-13));
                CHECK(u.at(i, j, k, 1) == doctest::Approx(-(j + 0.5)).epsilon(1e-13));
                CHECK(u.at(i, j, k, 2) == 0.0);
            }
}

TEST_CASE("curl is linear") {
    Rng rng(17);
    const GridDims res{6, 6, 6};
    const VectorGrid P = random_vector(res, rng);
    const VectorGrid Q = random_vector(res, rng);
    const double a = 1.7;
    VectorGrid combo(res);
    for (std::size_t n = 0; n < combo.data.size(); ++n)
        combo.data[n] = a * P.data[n] + Q.data[n];
    const VectorGrid lhs = curl(combo);
    const VectorGrid cP = curl(P), cQ = curl(Q);
    for (std::size_t n = 0; n < lhs.data.size(); ++n)
        CHECK(lhs.data[n] == doctest::Approx(a * cP.data[n] + cQ.data[n]).epsilon(1e-13));
}

TEST_CASE("divergence basics") {
    const GridDims res{6, 6, 6};
    SUBCASE("constant field has zero divergence") {
        const VectorGrid u(res, Vec3{1.0, 2.0, -3.0});
        for (double v : divergence(u).data) CHECK(v == 0.0);
    }
    SUBCASE("unit ramp has unit divergence in the interior") {
        VectorGrid u(res);
        for (int k = 0; k < res.nz; ++k)
            for (int j = 0; j < res.ny; ++j)
                for (int i = 0; i < res.nx; ++i) u.at(i, j, k, 0) = i + 0.5;
        const ScalarGrid d = divergence(u);
        for (int k = 1; k < res.nz - 1; ++k)
            for (int j = 1; j < res.ny - 1; ++j)
                for (int i = 1; i < res.nx - 1; ++i)
                    CHECK(d.at(i, j, k) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("curl fields are interior divergence free") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const VectorGrid P = random_vector(GridDims{8, 6, 7}, rng, -2.0, 2.0);
        CHECK(max_interior_divergence(curl(P)) < 1e-12);
    }
}

TEST_CASE("B-spline upsampling keeps constants and linear ramps") {
    const GridDims res{4, 4, 4};
    SUBCASE("constant") {
        const ScalarGrid g(res, 5.5);
        for (double v : upsample_bspline2(g).data)
            CHECK(v == doctest::Approx(5.5).epsilon(1e-15));
    }
    SUBCASE("ramp") {
        ScalarGrid g(res);
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 4; ++i) g.at(i, j, k) = static_cast<double>(i);
        const ScalarGrid f = upsample_bspline2(g);
        // fine center i_f maps to coarse coordinate (i_f + 0.5)/2 - 0.5 in index units
        for (int k = 2; k < 6; ++k)
            for (int j = 2; j < 6; ++j)
                for (int i = 2; i < 6; ++i) // interior: clamping does not reach here
                    CHECK(f.at(i, j, k) ==
                          doctest::Approx((i + 0.5) / 2.0 - 0.5).epsilon(1e-12));
    }
}

TEST_CASE("B-spline upsampling of an impulse matches the tensor-product kernel") {
    const GridDims res{5, 5, 5};
    ScalarGrid g(res);
    g.at(2, 2, 2) = 1.0;
    const ScalarGrid f = upsample_bspline2(g);
    for (int k = 1; k < 9; ++k)
        for (int j = 1; j < 9; ++j)
            for (int i = 1; i < 9; ++i) {
                // offset of the fine center from the impulse in coarse units
                const double tx = (i + 0.5) / 2.0 - 2.5;
                const double ty = (j + 0.5) / 2.0 - 2.5;
                const double tz = (k + 0.5) / 2.0 - 2.5;
                const double expected = b2(tx) * b2(ty) * b2(tz);
                CHECK(f.at(i, j, k) == doctest::Approx(expected).epsilon(1e-12));
            }
}

TEST_CASE("linear upsampling keeps constants and ramps") {
    const GridDims res{4, 4, 4};
    const ScalarGrid c(res, -2.25);
    for (double v : upsample_linear(c).data) CHECK(v == doctest::Approx(-2.25).epsilon(1e-15));
    ScalarGrid g(res);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) g.at(i, j, k) = static_cast<double>(j);
    const ScalarGrid f = upsample_linear(g);
    for (int k = 2; k < 6; ++k)
        for (int j = 2; j < 6; ++j)
            for (int i = 2; i < 6; ++i)
                CHECK(f.at(i, j, k) == doctest::Approx((j + 0.5) / 2.0 - 0.5).epsilon(1e-12));
}

TEST_CASE("linear potential upsampling is rougher under curl than B-spline") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const VectorGrid P = random_vector(GridDims{4, 6, 4}, rng, -1.0, 1.0);
        const double rough_lin = max_second_difference(curl(upsample_linear(P)));
        const double rough_b2 = max_second_difference(curl(upsample_bspline2(P)));
        CHECK(rough_b2 < rough_lin);
    }
}

TEST_CASE("average pooling") {
    SUBCASE("constant") {
        const ScalarGrid g(GridDims{4, 4, 4}, 1.25);
        for (double v : downsample_avg(g).data) CHECK(v == 1.25);
    }
    SUBCASE("a 2x2x2 block averages to its mean") {
        ScalarGrid g(GridDims{2, 2, 2});
        for (int n = 0; n < 8; ++n) g.data[static_cast<std::size_t>(n)] = n;
        const ScalarGrid d = downsample_avg(g);
        REQUIRE(d.res.cells() == 1);
        CHECK(d.data[0] == doctest::Approx(3.5));
    }
    SUBCASE("odd axes are rejected") {
        CHECK_THROWS_AS(downsample_avg(ScalarGrid(GridDims{3, 4, 4})), ShapeError);
    }
    SUBCASE("upsample-then-downsample approximates the identity on smooth fields") {
        Rng rng(3);
        const GridDims res{8, 8, 8};
        const ScalarGrid g = smooth_scalar(res, rng, 1.0);
        const ScalarGrid back = downsample_avg(upsample_bspline2(g));
        const double range = max_value(g) - min_value(g);
        double se = 0.0;
        for (std::size_t n = 0; n < g.data.size(); ++n) {
            const double d = g.data[n] - back.data[n];
            se += d * d;
        }
        CHECK(std::sqrt(se / static_cast<double>(g.data.size())) < 0.05 * range);
    }
}

TEST_CASE("multi-scale composition") {
    Rng rng(8);
    const GridDims coarse{4, 6, 4};

    SUBCASE("single level is the identity") {
        MultiScalePotential msp;
        msp.levels.push_back(random_vector(coarse, rng));
        const VectorGrid out = compose_multiscale(msp);
        CHECK(out.data == msp.levels[0].data);
    }
    SUBCASE("zero residuals reduce to repeated upsampling") {
        MultiScalePotential msp;
        msp.levels.push_back(random_vector(coarse, rng));
        msp.levels.push_back(VectorGrid(GridDims{8, 12, 8}));
        msp.levels.push_back(VectorGrid(GridDims{16, 24, 16}));
        const VectorGrid out = compose_multiscale(msp);
        const VectorGrid manual = upsample_bspline2(upsample_bspline2(msp.levels[0]));
        CHECK(out.data == manual.data);
    }
    SUBCASE("curl distributes over the residual sum") {
        MultiScalePotential msp;
        msp.levels.push_back(random_vector(coarse, rng));
        msp.levels.push_back(random_vector(GridDims{8, 12, 8}, rng));
        msp.levels.push_back(random_vector(GridDims{16, 24, 16}, rng));
        const VectorGrid composed_curl = curl(compose_multiscale(msp));
        // term-by-term: curl of each residual's upsample chain
        const VectorGrid t0 = curl(upsample_bspline2(upsample_bspline2(msp.levels[0])));
        const VectorGrid t1 = curl(upsample_bspline2(msp.levels[1]));
        const VectorGrid t2 = curl(msp.levels[2]);
        for (std::size_t n = 0; n < composed_curl.data.size(); ++n)
            CHECK(composed_curl.data[n] ==
                  doctest::Approx(t0.data[n] + t1.data[n] + t2.data[n]).epsilon(1e-12));
    }
    SUBCASE("ladder violations are rejected") {
        MultiScalePotential msp;
        msp.levels.push_back(VectorGrid(coarse));
        msp.levels.push_back(VectorGrid(GridDims{9, 12, 8}));
        CHECK_THROWS_AS(compose_multiscale(msp), ShapeError);
        CHECK_THROWS_AS(ladder_dims(GridDims{6, 6, 6}, 3), ShapeError);
    }
}

TEST_CASE("resampling and curl adjoints are exact transposes") {
    Rng rng(404);
    const GridDims coarse{4, 6, 4};
    const GridDims fine{8, 12, 8};

    SUBCASE("curl") {
        const VectorGrid x = random_vector(fine, rng);
        const VectorGrid y = random_vector(fine, rng);
        const double lhs = dot_flat(curl(x).data, y.data);
        const double rhs = dot_flat(x.data, curl_adjoint(y).data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    SUBCASE("upsample, both kernels, both grid kinds") {
        const VectorGrid x = random_vector(coarse, rng);
        const VectorGrid y = random_vector(fine, rng);
        double lhs = dot_flat(upsample_bspline2(x).data, y.data);
        double rhs = dot_flat(x.data, upsample_bspline2_adjoint(y).data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
        lhs = dot_flat(upsample_linear(x).data, y.data);
        rhs = dot_flat(x.data, upsample_linear_adjoint(y).data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));

        const ScalarGrid xs = random_scalar(coarse, rng);
        const ScalarGrid ys = random_scalar(fine, rng);
        lhs = dot_flat(upsample_bspline2(xs).data, ys.data);
        rhs = dot_flat(xs.data, upsample_bspline2_adjoint(ys).data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    SUBCASE("downsample") {
        const ScalarGrid x = random_scalar(fine, rng);
        const ScalarGrid y = random_scalar(coarse, rng);
        const double lhs = dot_flat(downsample_avg(x).data, y.data);
        const double rhs = dot_flat(x.data, downsample_avg_adjoint(y).data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    SUBCASE("compose") {
        MultiScalePotential msp;
        msp.levels.push_back(random_vector(coarse, rng));
        msp.levels.push_back(random_vector(fine, rng));
        const VectorGrid y = random_vector(fine, rng);
        const double lhs = dot_flat(compose_multiscale(msp).data, y.data);
        const auto grads = compose_multiscale_adjoint(y, {coarse, fine});
        const double rhs =
            dot_flat(msp.levels[0].data, grads[0].data) + dot_flat(msp.levels[1].data, grads[1].data);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("adjoint edge behaviour") {
    SUBCASE("zero gradient stays zero through curl") {
        const VectorGrid zero(GridDims{5, 5, 5});
        for (double v : curl_adjoint(zero).data) CHECK(v == 0.0);
    }
    SUBCASE("downsample adjoint spreads each coarse gradient over its 8 children") {
        ScalarGrid g(GridDims{2, 2, 2});
        g.data[0] = 8.0;
        const ScalarGrid spread = downsample_avg_adjoint(g);
        CHECK(spread.res == GridDims{4, 4, 4});
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) CHECK(spread.at(i, j, k) == 1.0);
        CHECK(spread.at(3, 3, 3) == 0.0);
    }
}
