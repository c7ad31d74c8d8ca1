#include "voltrans/transport.hpp"

#include <algorithm>
#include <cmath>

#include "voltrans/threading.hpp"

namespace voltrans {

namespace {

inline Vec3 backtrace(const GridDims& res, std::size_t n, const VectorGrid& u, double dt) {
    const int i = static_cast<int>(n % res.nx);
    const int j = static_cast<int>((n / res.nx) % res.ny);
    const int k = static_cast<int>(n / (static_cast<std::size_t>(res.nx) * res.ny));
    const Vec3 x = res.cell_center(i, j, k);
    const std::size_t b = n * 3;
    return {x.x - dt * u.data[b], x.y - dt * u.data[b + 1], x.z - dt * u.data[b + 2]};
}

// distance of the backtrace point to the nearest interpolation kink
// (stencil switch or clamp hull crossing) over the three axes
inline double face_distance(const GridDims& res, const Vec3& p) {
    double d = std::numeric_limits<double>::infinity();
    const int n[3] = {res.nx, res.ny, res.nz};
    for (int a = 0; a < 3; ++a) {
        const double lo = 0.5, hi = n[a] - 0.5;
        if (p[a] < lo || p[a] > hi) {
            d = std::min(d, p[a] < lo ? lo - p[a] : p[a] - hi);
        } else {
            const double t = p[a] - 0.5;
            const double f = t - std::floor(t);
            d = std::min(d, std::min(f, 1.0 - f));
        }
    }
    return d;
}

constexpr std::int64_t kCellGrain = 4096;

// fixed partial-accumulator count for deterministic scatter, independent of
// the thread count
inline std::int64_t scatter_grain(std::size_t cells) {
    const std::int64_t want_chunks = std::min<std::int64_t>(8, (cells + 65535) / 65536);
    return (static_cast<std::int64_t>(cells) + want_chunks - 1) / want_chunks;
}

} // namespace

ScalarGrid advect_sl(const ScalarGrid& rho, const VectorGrid& u, double dt) {
    require_same_res(rho.res, u.res, "advect_sl");
    ScalarGrid out(rho.res);
    const std::size_t cells = rho.res.cells();
    parallel_ranges(static_cast<std::int64_t>(cells), kCellGrain,
                    [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t n = b; n < e; ++n)
                            out.data[static_cast<std::size_t>(n)] = sample_trilinear(
                                rho, backtrace(rho.res, static_cast<std::size_t>(n), u, dt));
                    });
    return out;
}

ScalarGrid advect_sl_jvp(const ScalarGrid& rho, const VectorGrid& u, const ScalarGrid& drho,
                         const VectorGrid& du, double dt) {
    require_same_res(rho.res, u.res, "advect_sl_jvp");
    require_same_res(rho.res, drho.res, "advect_sl_jvp");
    require_same_res(rho.res, du.res, "advect_sl_jvp");
    ScalarGrid out(rho.res);
    const std::size_t cells = rho.res.cells();
    parallel_ranges(static_cast<std::int64_t>(cells), kCellGrain,
                    [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t ni = b; ni < e; ++ni) {
                            const std::size_t n = static_cast<std::size_t>(ni);
                            const Vec3 p = backtrace(rho.res, n, u, dt);
                            const Vec3 g = sample_position_gradient(rho, p);
                            const Vec3 dp{-dt * du.data[3 * n], -dt * du.data[3 * n + 1],
                                          -dt * du.data[3 * n + 2]};
                            out.data[n] = sample_trilinear(drho, p) + dot(g, dp);
                        }
                    });
    return out;
}

AdvectGrads advect_sl_adjoint(const ScalarGrid& grad_out, const ScalarGrid& rho,
                              const VectorGrid& u, double dt) {
    require_same_res(rho.res, u.res, "advect_sl_adjoint");
    require_same_res(rho.res, grad_out.res, "advect_sl_adjoint");
    AdvectGrads grads{ScalarGrid(rho.res), VectorGrid(rho.res)};
    const std::size_t cells = rho.res.cells();

    // velocity gradient is local to each cell
    parallel_ranges(static_cast<std::int64_t>(cells), kCellGrain,
                    [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t ni = b; ni < e; ++ni) {
                            const std::size_t n = static_cast<std::size_t>(ni);
                            const Vec3 p = backtrace(rho.res, n, u, dt);
                            const Vec3 g = sample_position_gradient(rho, p);
                            const double go = grad_out.data[n];
                            grads.u.data[3 * n] = -dt * go * g.x;
                            grads.u.data[3 * n + 1] = -dt * go * g.y;
                            grads.u.data[3 * n + 2] = -dt * go * g.z;
                        }
                    });

    // density gradient scatters into the interpolation stencils; partial grids
    // are merged in fixed chunk order for bit-reproducible results
    parallel_scatter<ScalarGrid>(
        static_cast<std::int64_t>(cells), scatter_grain(cells),
        [&]() { return ScalarGrid(rho.res); },
        [&](ScalarGrid& part, std::int64_t b, std::int64_t e) {
            for (std::int64_t ni = b; ni < e; ++ni) {
                const std::size_t n = static_cast<std::size_t>(ni);
                scatter_trilinear(part, backtrace(rho.res, n, u, dt), grad_out.data[n]);
            }
        },
        [&](ScalarGrid&& part) {
            for (std::size_t n = 0; n < cells; ++n) grads.rho.data[n] += part.data[n];
        });
    return grads;
}

// ---------------------------------------------------------------------------
// MacCormack
// ---------------------------------------------------------------------------

namespace {

struct MacCormackForward {
    ScalarGrid phat_next; // first (forward) pass
    ScalarGrid phat_prev; // second (backward) pass
    std::vector<unsigned char> unclamped;
    ScalarGrid out;
};

MacCormackForward maccormack_forward(const ScalarGrid& rho, const VectorGrid& u, double dt,
                                     MacCormackStats* stats) {
    MacCormackForward f;
    f.phat_next = advect_sl(rho, u, dt);
    f.phat_prev = advect_sl(f.phat_next, u, -dt);
    f.out = ScalarGrid(rho.res);
    const std::size_t cells = rho.res.cells();
    f.unclamped.assign(cells, 1);

    std::vector<double> margin(stats ? cells : 0);
    std::vector<double> face(stats ? cells : 0);
    parallel_ranges(
        static_cast<std::int64_t>(cells), kCellGrain, [&](std::int64_t b, std::int64_t e) {
            for (std::int64_t ni = b; ni < e; ++ni) {
                const std::size_t n = static_cast<std::size_t>(ni);
                const Vec3 p = backtrace(rho.res, n, u, dt);
                double lo, hi;
                trilinear_corner_range(rho, p, lo, hi);
                const double raw =
                    f.phat_next.data[n] + 0.5 * (rho.data[n] - f.phat_prev.data[n]);
                double v = raw;
                if (raw < lo) {
                    v = lo;
                    f.unclamped[n] = 0;
                } else if (raw > hi) {
                    v = hi;
                    f.unclamped[n] = 0;
                }
                f.out.data[n] = v;
                if (stats) {
                    margin[n] = std::min(std::abs(raw - lo), std::abs(hi - raw));
                    // both lookup positions carry interpolation kinks
                    const Vec3 p2 = backtrace(rho.res, n, u, -dt);
                    face[n] = std::min(face_distance(rho.res, p), face_distance(rho.res, p2));
                }
            }
        });
    if (stats) {
        for (std::size_t n = 0; n < cells; ++n) {
            stats->min_clamp_margin = std::min(stats->min_clamp_margin, margin[n]);
            stats->min_face_distance = std::min(stats->min_face_distance, face[n]);
            if (!f.unclamped[n]) ++stats->clamped_cells;
        }
    }
    return f;
}

} // namespace

ScalarGrid advect_maccormack(const ScalarGrid& rho, const VectorGrid& u, double dt,
                             MacCormackStats* stats) {
    require_same_res(rho.res, u.res, "advect_maccormack");
    return maccormack_forward(rho, u, dt, stats).out;
}

ScalarGrid advect_maccormack_jvp(const ScalarGrid& rho, const VectorGrid& u,
                                 const ScalarGrid& drho, const VectorGrid& du, double dt) {
    require_same_res(rho.res, u.res, "advect_maccormack_jvp");
    MacCormackForward f = maccormack_forward(rho, u, dt, nullptr);

    ScalarGrid dphat_next = advect_sl_jvp(rho, u, drho, du, dt);
    ScalarGrid dphat_prev = advect_sl_jvp(f.phat_next, u, dphat_next, du, -dt);

    ScalarGrid out(rho.res);
    const std::size_t cells = rho.res.cells();
    for (std::size_t n = 0; n < cells; ++n) {
        const double draw = dphat_next.data[n] + 0.5 * (drho.data[n] - dphat_prev.data[n]);
        out.data[n] = f.unclamped[n] ? draw : 0.0;
    }
    return out;
}

AdvectGrads advect_maccormack_adjoint(const ScalarGrid& grad_out, const ScalarGrid& rho,
                                      const VectorGrid& u, double dt) {
    require_same_res(rho.res, u.res, "advect_maccormack_adjoint");
    require_same_res(rho.res, grad_out.res, "advect_maccormack_adjoint");
    MacCormackForward f = maccormack_forward(rho, u, dt, nullptr);
    const std::size_t cells = rho.res.cells();

    // clamp subgradient: clamped cells pass nothing back
    ScalarGrid g(rho.res);
    for (std::size_t n = 0; n < cells; ++n)
        g.data[n] = f.unclamped[n] ? grad_out.data[n] : 0.0;

    // raw = phat_next + 0.5*(rho - phat_prev)
    ScalarGrid g_phat_prev(rho.res);
    for (std::size_t n = 0; n < cells; ++n) g_phat_prev.data[n] = -0.5 * g.data[n];

    // phat_prev = SL(phat_next, u, -dt); velocity enters with dt sign flipped
    AdvectGrads pass2 = advect_sl_adjoint(g_phat_prev, f.phat_next, u, -dt);

    ScalarGrid g_phat_next(rho.res);
    for (std::size_t n = 0; n < cells; ++n)
        g_phat_next.data[n] = g.data[n] + pass2.rho.data[n];

    AdvectGrads pass1 = advect_sl_adjoint(g_phat_next, rho, u, dt);

    AdvectGrads grads{ScalarGrid(rho.res), VectorGrid(rho.res)};
    for (std::size_t n = 0; n < cells; ++n)
        grads.rho.data[n] = pass1.rho.data[n] + 0.5 * g.data[n];
    for (std::size_t n = 0; n < grads.u.data.size(); ++n)
        grads.u.data[n] = pass1.u.data[n] + pass2.u.data[n];
    return grads;
}

std::vector<ScalarGrid> advect_sequence(const ScalarGrid& rho0,
                                        const std::vector<VectorGrid>& velocities,
                                        double dt) {
    std::vector<ScalarGrid> frames;
    frames.reserve(velocities.size());
    const ScalarGrid* prev = &rho0;
    for (const VectorGrid& u : velocities) {
        frames.push_back(advect_maccormack(*prev, u, dt));
        prev = &frames.back();
    }
    return frames;
}

} // namespace voltrans
