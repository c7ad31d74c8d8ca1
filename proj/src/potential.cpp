#include "voltrans/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "voltrans/threading.hpp"

namespace voltrans {

namespace {

// ---------------------------------------------------------------------------
// Axis derivative D_a and its transpose, channel-generic.
// ---------------------------------------------------------------------------

struct AxisView {
    int n;            // length along the axis
    std::size_t step; // flat stride along the axis (in elements of one channel)
};

AxisView axis_view(const GridDims& res, int axis) {
    switch (axis) {
        case 0: return {res.nx, 1};
        case 1: return {res.ny, static_cast<std::size_t>(res.nx)};
        default: return {res.nz, static_cast<std::size_t>(res.nx) * res.ny};
    }
}

// iterate over all 1D lines along `axis`; fn(base_flat_index)
template <class F>
void for_each_line(const GridDims& res, int axis, F&& fn) {
    const int dims[3] = {res.nx, res.ny, res.nz};
    int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
    const std::size_t strides[3] = {1, static_cast<std::size_t>(res.nx),
                                    static_cast<std::size_t>(res.nx) * res.ny};
    const std::int64_t n_lines = static_cast<std::int64_t>(dims[oa]) * dims[ob];
    parallel_ranges(n_lines, 256, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t l = b; l < e; ++l) {
            const int ia = static_cast<int>(l % dims[oa]);
            const int ib = static_cast<int>(l / dims[oa]);
            fn(static_cast<std::size_t>(ia) * strides[oa] +
               static_cast<std::size_t>(ib) * strides[ob]);
        }
    });
}

// dst[dst_ch] += sign * D_axis src[src_ch]; central interior, one-sided
// boundary, zero if n == 1
void axis_derivative(const std::vector<double>& src, std::vector<double>& dst,
                     const GridDims& res, int axis, int src_channels, int src_ch,
                     int dst_channels, int dst_ch, double sign) {
    const AxisView ax = axis_view(res, axis);
    for_each_line(res, axis, [&](std::size_t base) {
        auto value = [&](int i) { return src[(base + i * ax.step) * src_channels + src_ch]; };
        auto out = [&](int i) -> double& {
            return dst[(base + i * ax.step) * dst_channels + dst_ch];
        };
        if (ax.n == 1) return;
        out(0) += sign * (value(1) - value(0));
        for (int i = 1; i < ax.n - 1; ++i)
            out(i) += sign * 0.5 * (value(i + 1) - value(i - 1));
        out(ax.n - 1) += sign * (value(ax.n - 1) - value(ax.n - 2));
    });
}

// transpose of axis_derivative: scatter g into src-gradient space
void axis_derivative_transpose(const std::vector<double>& g, std::vector<double>& dst,
                               const GridDims& res, int axis, int g_channels, int g_ch,
                               int dst_channels, int dst_ch, double sign) {
    const AxisView ax = axis_view(res, axis);
    for_each_line(res, axis, [&](std::size_t base) {
        auto gin = [&](int i) { return g[(base + i * ax.step) * g_channels + g_ch]; };
        auto out = [&](int i) -> double& {
            return dst[(base + i * ax.step) * dst_channels + dst_ch];
        };
        if (ax.n == 1) return;
        // forward stencil at 0: g0*(v1 - v0)
        out(1) += sign * gin(0);
        out(0) -= sign * gin(0);
        for (int i = 1; i < ax.n - 1; ++i) {
            out(i + 1) += sign * 0.5 * gin(i);
            out(i - 1) -= sign * 0.5 * gin(i);
        }
        // backward stencil at n-1: g*(v_{n-1} - v_{n-2})
        out(ax.n - 1) += sign * gin(ax.n - 1);
        out(ax.n - 2) -= sign * gin(ax.n - 1);
    });
}

} // namespace

VectorGrid curl(const VectorGrid& P) {
    VectorGrid u(P.res);
    // u_x = dPz/dy - dPy/dz; u_y = dPx/dz - dPz/dx; u_z = dPy/dx - dPx/dy
    axis_derivative(P.data, u.data, P.res, /*axis*/ 1, 3, 2, 3, 0, +1.0);
    axis_derivative(P.data, u.data, P.res, 2, 3, 1, 3, 0, -1.0);
    axis_derivative(P.data, u.data, P.res, 2, 3, 0, 3, 1, +1.0);
    axis_derivative(P.data, u.data, P.res, 0, 3, 2, 3, 1, -1.0);
    axis_derivative(P.data, u.data, P.res, 0, 3, 1, 3, 2, +1.0);
    axis_derivative(P.data, u.data, P.res, 1, 3, 0, 3, 2, -1.0);
    return u;
}

VectorGrid curl_adjoint(const VectorGrid& grad_u) {
    VectorGrid gP(grad_u.res);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 1, 3, 0, 3, 2, +1.0);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 2, 3, 0, 3, 1, -1.0);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 2, 3, 1, 3, 0, +1.0);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 0, 3, 1, 3, 2, -1.0);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 0, 3, 2, 3, 1, +1.0);
    axis_derivative_transpose(grad_u.data, gP.data, grad_u.res, 1, 3, 2, 3, 0, -1.0);
    return gP;
}

ScalarGrid divergence(const VectorGrid& u) {
    ScalarGrid d(u.res);
    axis_derivative(u.data, d.data, u.res, 0, 3, 0, 1, 0, +1.0);
    axis_derivative(u.data, d.data, u.res, 1, 3, 1, 1, 0, +1.0);
    axis_derivative(u.data, d.data, u.res, 2, 3, 2, 1, 0, +1.0);
    return d;
}

double max_interior_divergence(const VectorGrid& u) {
    const ScalarGrid d = divergence(u);
    double m = 0.0;
    for (int k = 1; k + 1 < u.res.nz; ++k)
        for (int j = 1; j + 1 < u.res.ny; ++j)
            for (int i = 1; i + 1 < u.res.nx; ++i)
                m = std::max(m, std::abs(d.at(i, j, k)));
    return m;
}

namespace {

// ---------------------------------------------------------------------------
// Factor-2 upsampling, separable per axis.
//
// With coarse cells as control points, the fine cell centers fall at fixed
// phases between control points; the per-axis weights are
//   quadratic B-spline: even (9, 22, 1)/32 on (m-1, m, m+1), odd mirrored
//   trilinear:          even (1, 3)/4 on (m-1, m),   odd (3, 1)/4 on (m, m+1)
// ---------------------------------------------------------------------------

struct Taps {
    int offset[3];
    double w[3];
    int count;
};

void bspline_taps(Taps& even, Taps& odd) {
    even = {{-1, 0, 1}, {9.0 / 32.0, 22.0 / 32.0, 1.0 / 32.0}, 3};
    odd = {{-1, 0, 1}, {1.0 / 32.0, 22.0 / 32.0, 9.0 / 32.0}, 3};
}

void linear_taps(Taps& even, Taps& odd) {
    even = {{-1, 0, 0}, {0.25, 0.75, 0.0}, 2};
    odd = {{0, 1, 0}, {0.75, 0.25, 0.0}, 2};
}

// doubles `axis` of src (res) into dst (res with that axis doubled)
void upsample_axis(const std::vector<double>& src, std::vector<double>& dst,
                   const GridDims& src_res, int axis, int channels, const Taps& even,
                   const Taps& odd) {
    GridDims dst_res = src_res;
    (axis == 0 ? dst_res.nx : axis == 1 ? dst_res.ny : dst_res.nz) *= 2;
    const AxisView sa = axis_view(src_res, axis);
    const AxisView da = axis_view(dst_res, axis);

    const int dims[3] = {src_res.nx, src_res.ny, src_res.nz};
    int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
    const std::size_t sstr[3] = {1, static_cast<std::size_t>(src_res.nx),
                                 static_cast<std::size_t>(src_res.nx) * src_res.ny};
    const std::size_t dstr[3] = {1, static_cast<std::size_t>(dst_res.nx),
                                 static_cast<std::size_t>(dst_res.nx) * dst_res.ny};
    const std::int64_t n_lines = static_cast<std::int64_t>(dims[oa]) * dims[ob];
    parallel_ranges(n_lines, 128, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t l = b; l < e; ++l) {
            const int ia = static_cast<int>(l % dims[oa]);
            const int ib = static_cast<int>(l / dims[oa]);
            const std::size_t sbase = ia * sstr[oa] + ib * sstr[ob];
            const std::size_t dbase = ia * dstr[oa] + ib * dstr[ob];
            for (int m = 0; m < sa.n; ++m) {
                for (int parity = 0; parity < 2; ++parity) {
                    const Taps& t = parity ? odd : even;
                    for (int c = 0; c < channels; ++c) {
                        double acc = 0.0;
                        for (int k = 0; k < t.count; ++k) {
                            const int idx = std::clamp(m + t.offset[k], 0, sa.n - 1);
                            acc += t.w[k] * src[(sbase + idx * sa.step) * channels + c];
                        }
                        dst[(dbase + (2 * m + parity) * da.step) * channels + c] = acc;
                    }
                }
            }
        }
    });
}

// transpose of upsample_axis: scatter fine gradients back onto coarse cells
void upsample_axis_transpose(const std::vector<double>& gfine, std::vector<double>& gcoarse,
                             const GridDims& coarse_res, int axis, int channels,
                             const Taps& even, const Taps& odd) {
    GridDims fine_res = coarse_res;
    (axis == 0 ? fine_res.nx : axis == 1 ? fine_res.ny : fine_res.nz) *= 2;
    const AxisView ca = axis_view(coarse_res, axis);
    const AxisView fa = axis_view(fine_res, axis);

    const int dims[3] = {coarse_res.nx, coarse_res.ny, coarse_res.nz};
    int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
    const std::size_t cstr[3] = {1, static_cast<std::size_t>(coarse_res.nx),
                                 static_cast<std::size_t>(coarse_res.nx) * coarse_res.ny};
    const std::size_t fstr[3] = {1, static_cast<std::size_t>(fine_res.nx),
                                 static_cast<std::size_t>(fine_res.nx) * fine_res.ny};
    const std::int64_t n_lines = static_cast<std::int64_t>(dims[oa]) * dims[ob];
    // scatter stays within one line, so lines parallelize deterministically
    parallel_ranges(n_lines, 128, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t l = b; l < e; ++l) {
            const int ia = static_cast<int>(l % dims[oa]);
            const int ib = static_cast<int>(l / dims[oa]);
            const std::size_t cbase = ia * cstr[oa] + ib * cstr[ob];
            const std::size_t fbase = ia * fstr[oa] + ib * fstr[ob];
            for (int m = 0; m < ca.n; ++m) {
                for (int parity = 0; parity < 2; ++parity) {
                    const Taps& t = parity ? odd : even;
                    for (int c = 0; c < channels; ++c) {
                        const double g =
                            gfine[(fbase + (2 * m + parity) * fa.step) * channels + c];
                        for (int k = 0; k < t.count; ++k) {
                            const int idx = std::clamp(m + t.offset[k], 0, ca.n - 1);
                            gcoarse[(cbase + idx * ca.step) * channels + c] += t.w[k] * g;
                        }
                    }
                }
            }
        }
    });
}

template <class Grid>
Grid upsample_impl(const Grid& g, int channels, bool bspline) {
    Taps even, odd;
    bspline ? bspline_taps(even, odd) : linear_taps(even, odd);
    GridDims res = g.res;
    std::vector<double> cur = g.data;
    for (int axis = 0; axis < 3; ++axis) {
        GridDims next = res;
        (axis == 0 ? next.nx : axis == 1 ? next.ny : next.nz) *= 2;
        std::vector<double> out(next.cells() * channels);
        upsample_axis(cur, out, res, axis, channels, even, odd);
        cur = std::move(out);
        res = next;
    }
    Grid result(res);
    result.data = std::move(cur);
    return result;
}

template <class Grid>
Grid upsample_adjoint_impl(const Grid& gfine, int channels, bool bspline) {
    Taps even, odd;
    bspline ? bspline_taps(even, odd) : linear_taps(even, odd);
    if (gfine.res.nx % 2 || gfine.res.ny % 2 || gfine.res.nz % 2)
        throw ShapeError("upsample adjoint: fine resolution must be even");
    GridDims res = gfine.res;
    std::vector<double> cur = gfine.data;
    // reverse the forward axis order
    for (int axis = 2; axis >= 0; --axis) {
        GridDims coarse = res;
        (axis == 0 ? coarse.nx : axis == 1 ? coarse.ny : coarse.nz) /= 2;
        std::vector<double> out(coarse.cells() * channels, 0.0);
        upsample_axis_transpose(cur, out, coarse, axis, channels, even, odd);
        cur = std::move(out);
        res = coarse;
    }
    Grid result(res);
    result.data = std::move(cur);
    return result;
}

} // namespace

ScalarGrid upsample_bspline2(const ScalarGrid& g) { return upsample_impl(g, 1, true); }
VectorGrid upsample_bspline2(const VectorGrid& g) { return upsample_impl(g, 3, true); }
ScalarGrid upsample_linear(const ScalarGrid& g) { return upsample_impl(g, 1, false); }
VectorGrid upsample_linear(const VectorGrid& g) { return upsample_impl(g, 3, false); }

ScalarGrid upsample_bspline2_adjoint(const ScalarGrid& g) { return upsample_adjoint_impl(g, 1, true); }
VectorGrid upsample_bspline2_adjoint(const VectorGrid& g) { return upsample_adjoint_impl(g, 3, true); }
ScalarGrid upsample_linear_adjoint(const ScalarGrid& g) { return upsample_adjoint_impl(g, 1, false); }
VectorGrid upsample_linear_adjoint(const VectorGrid& g) { return upsample_adjoint_impl(g, 3, false); }

// ---------------------------------------------------------------------------
// Average pooling.
// ---------------------------------------------------------------------------

namespace {

template <class Grid>
Grid downsample_impl(const Grid& g, int channels) {
    if (g.res.nx % 2 || g.res.ny % 2 || g.res.nz % 2)
        throw ShapeError("downsample_avg: every axis must be even");
    const GridDims cres{g.res.nx / 2, g.res.ny / 2, g.res.nz / 2};
    Grid out(cres);
    for (int k = 0; k < cres.nz; ++k)
        for (int j = 0; j < cres.ny; ++j)
            for (int i = 0; i < cres.nx; ++i)
                for (int c = 0; c < channels; ++c) {
                    double acc = 0.0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                acc += g.data[g.res.index(2 * i + dx, 2 * j + dy, 2 * k + dz) *
                                                  channels +
                                              c];
                    out.data[cres.index(i, j, k) * channels + c] = acc / 8.0;
                }
    return out;
}

template <class Grid>
Grid downsample_adjoint_impl(const Grid& gc, int channels) {
    const GridDims fres{gc.res.nx * 2, gc.res.ny * 2, gc.res.nz * 2};
    Grid out(fres);
    for (int k = 0; k < fres.nz; ++k)
        for (int j = 0; j < fres.ny; ++j)
            for (int i = 0; i < fres.nx; ++i)
                for (int c = 0; c < channels; ++c)
                    out.data[fres.index(i, j, k) * channels + c] =
                        gc.data[gc.res.index(i / 2, j / 2, k / 2) * channels + c] / 8.0;
    return out;
}

} // namespace

ScalarGrid downsample_avg(const ScalarGrid& g) { return downsample_impl(g, 1); }
VectorGrid downsample_avg(const VectorGrid& g) { return downsample_impl(g, 3); }
ScalarGrid downsample_avg_adjoint(const ScalarGrid& g) { return downsample_adjoint_impl(g, 1); }
VectorGrid downsample_avg_adjoint(const VectorGrid& g) { return downsample_adjoint_impl(g, 3); }

// ---------------------------------------------------------------------------
// Multi-scale composition.
// ---------------------------------------------------------------------------

std::vector<GridDims> ladder_dims(const GridDims& finest, int n_levels) {
    if (n_levels < 1) throw ShapeError("ladder_dims: need at least one level");
    std::vector<GridDims> dims(static_cast<std::size_t>(n_levels));
    dims.back() = finest;
    for (int l = n_levels - 2; l >= 0; --l) {
        const GridDims& f = dims[static_cast<std::size_t>(l) + 1];
        if (f.nx % 2 || f.ny % 2 || f.nz % 2)
            throw ShapeError("ladder_dims: resolution " + std::to_string(f.nx) + "x" +
                             std::to_string(f.ny) + "x" + std::to_string(f.nz) +
                             " not divisible by 2");
        dims[static_cast<std::size_t>(l)] = GridDims{f.nx / 2, f.ny / 2, f.nz / 2};
    }
    return dims;
}

void validate_ladder(const MultiScalePotential& msp) {
    if (msp.levels.empty()) throw ShapeError("multi-scale potential has no levels");
    for (std::size_t l = 0; l + 1 < msp.levels.size(); ++l) {
        const GridDims& a = msp.levels[l].res;
        const GridDims& b = msp.levels[l + 1].res;
        if (b.nx != 2 * a.nx || b.ny != 2 * a.ny || b.nz != 2 * a.nz)
            throw ShapeError("multi-scale ladder violated between level " + std::to_string(l) +
                             " and " + std::to_string(l + 1));
    }
}

VectorGrid compose_multiscale(const MultiScalePotential& msp) {
    validate_ladder(msp);
    VectorGrid x = msp.levels.front();
    for (std::size_t l = 1; l < msp.levels.size(); ++l) {
        VectorGrid up = upsample_bspline2(x);
        for (std::size_t n = 0; n < up.data.size(); ++n)
            up.data[n] += msp.levels[l].data[n];
        x = std::move(up);
    }
    return x;
}

std::vector<VectorGrid> compose_multiscale_adjoint(const VectorGrid& grad_finest,
                                                   const std::vector<GridDims>& dims) {
    if (dims.empty()) throw ShapeError("compose adjoint: empty ladder");
    require_same_res(grad_finest.res, dims.back(), "compose_multiscale_adjoint");
    std::vector<VectorGrid> grads(dims.size());
    VectorGrid g = grad_finest;
    for (std::size_t l = dims.size() - 1; l > 0; --l) {
        grads[l] = g;
        g = upsample_bspline2_adjoint(g);
    }
    grads[0] = std::move(g);
    return grads;
}

} // namespace voltrans
