#include "voltrans/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace voltrans {

namespace {

// Clamp one coordinate to the cell-center hull [0.5, n-0.5] and split into
// stencil indices + fraction. interior reports whether the point was strictly
// inside the hull (used to zero position gradients at the clamp).
inline void axis_stencil(double p, int n, int& lo, int& hi, double& f, bool& interior) {
    const double qmin = 0.5;
    const double qmax = n - 0.5;
    interior = (p >= qmin && p <= qmax);
    double q = std::min(std::max(p, qmin), qmax);
    double t = q - 0.5;
    int i0 = static_cast<int>(std::floor(t));
    if (i0 > n - 1) i0 = n - 1; // t == n-1 exactly
    f = t - i0;
    lo = i0;
    hi = std::min(i0 + 1, n - 1);
}

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

} // namespace

TrilinearStencil trilinear_stencil(const GridDims& res, const Vec3& p) {
    TrilinearStencil s;
    axis_stencil(p.x, res.nx, s.lo[0], s.hi[0], s.frac[0], s.interior[0]);
    axis_stencil(p.y, res.ny, s.lo[1], s.hi[1], s.frac[1], s.interior[1]);
    axis_stencil(p.z, res.nz, s.lo[2], s.hi[2], s.frac[2], s.interior[2]);
    return s;
}

double sample_trilinear(const ScalarGrid& g, const Vec3& p) {
    const TrilinearStencil s = trilinear_stencil(g.res, p);
    const double c00 = lerp(g.at(s.lo[0], s.lo[1], s.lo[2]), g.at(s.hi[0], s.lo[1], s.lo[2]), s.frac[0]);
    const double c10 = lerp(g.at(s.lo[0], s.hi[1], s.lo[2]), g.at(s.hi[0], s.hi[1], s.lo[2]), s.frac[0]);
    const double c01 = lerp(g.at(s.lo[0], s.lo[1], s.hi[2]), g.at(s.hi[0], s.lo[1], s.hi[2]), s.frac[0]);
    const double c11 = lerp(g.at(s.lo[0], s.hi[1], s.hi[2]), g.at(s.hi[0], s.hi[1], s.hi[2]), s.frac[0]);
    const double c0 = lerp(c00, c10, s.frac[1]);
    const double c1 = lerp(c01, c11, s.frac[1]);
    return lerp(c0, c1, s.frac[2]);
}

Vec3 sample_trilinear(const VectorGrid& g, const Vec3& p) {
    const TrilinearStencil s = trilinear_stencil(g.res, p);
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
        const double c00 = lerp(g.at(s.lo[0], s.lo[1], s.lo[2], c), g.at(s.hi[0], s.lo[1], s.lo[2], c), s.frac[0]);
        const double c10 = lerp(g.at(s.lo[0], s.hi[1], s.lo[2], c), g.at(s.hi[0], s.hi[1], s.lo[2], c), s.frac[0]);
        const double c01 = lerp(g.at(s.lo[0], s.lo[1], s.hi[2], c), g.at(s.hi[0], s.lo[1], s.hi[2], c), s.frac[0]);
        const double c11 = lerp(g.at(s.lo[0], s.hi[1], s.hi[2], c), g.at(s.hi[0], s.hi[1], s.hi[2], c), s.frac[0]);
        out[c] = lerp(lerp(c00, c10, s.frac[1]), lerp(c01, c11, s.frac[1]), s.frac[2]);
    }
    return out;
}

Vec3 sample_position_gradient(const ScalarGrid& g, const Vec3& p) {
    const TrilinearStencil s = trilinear_stencil(g.res, p);
    const double fx = s.frac[0], fy = s.frac[1], fz = s.frac[2];
    const double v000 = g.at(s.lo[0], s.lo[1], s.lo[2]);
    const double v100 = g.at(s.hi[0], s.lo[1], s.lo[2]);
    const double v010 = g.at(s.lo[0], s.hi[1], s.lo[2]);
    const double v110 = g.at(s.hi[0], s.hi[1], s.lo[2]);
    const double v001 = g.at(s.lo[0], s.lo[1], s.hi[2]);
    const double v101 = g.at(s.hi[0], s.lo[1], s.hi[2]);
    const double v011 = g.at(s.lo[0], s.hi[1], s.hi[2]);
    const double v111 = g.at(s.hi[0], s.hi[1], s.hi[2]);

    Vec3 grad;
    grad.x = (1 - fy) * (1 - fz) * (v100 - v000) + fy * (1 - fz) * (v110 - v010) +
             (1 - fy) * fz * (v101 - v001) + fy * fz * (v111 - v011);
    grad.y = (1 - fx) * (1 - fz) * (v010 - v000) + fx * (1 - fz) * (v110 - v100) +
             (1 - fx) * fz * (v011 - v001) + fx * fz * (v111 - v101);
    grad.z = (1 - fx) * (1 - fy) * (v001 - v000) + fx * (1 - fy) * (v101 - v100) +
             (1 - fx) * fy * (v011 - v010) + fx * fy * (v111 - v110);
    if (!s.interior[0]) grad.x = 0.0;
    if (!s.interior[1]) grad.y = 0.0;
    if (!s.interior[2]) grad.z = 0.0;
    return grad;
}

void scatter_trilinear(ScalarGrid& into, const Vec3& p, double w) {
    const TrilinearStencil s = trilinear_stencil(into.res, p);
    const double fx = s.frac[0], fy = s.frac[1], fz = s.frac[2];
    into.at(s.lo[0], s.lo[1], s.lo[2]) += w * (1 - fx) * (1 - fy) * (1 - fz);
    into.at(s.hi[0], s.lo[1], s.lo[2]) += w * fx * (1 - fy) * (1 - fz);
    into.at(s.lo[0], s.hi[1], s.lo[2]) += w * (1 - fx) * fy * (1 - fz);
    into.at(s.hi[0], s.hi[1], s.lo[2]) += w * fx * fy * (1 - fz);
    into.at(s.lo[0], s.lo[1], s.hi[2]) += w * (1 - fx) * (1 - fy) * fz;
    into.at(s.hi[0], s.lo[1], s.hi[2]) += w * fx * (1 - fy) * fz;
    into.at(s.lo[0], s.hi[1], s.hi[2]) += w * (1 - fx) * fy * fz;
    into.at(s.hi[0], s.hi[1], s.hi[2]) += w * fx * fy * fz;
}

void trilinear_corner_range(const ScalarGrid& g, const Vec3& p, double& lo, double& hi) {
    const TrilinearStencil s = trilinear_stencil(g.res, p);
    lo = hi = g.at(s.lo[0], s.lo[1], s.lo[2]);
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double v = g.at(dx ? s.hi[0] : s.lo[0], dy ? s.hi[1] : s.lo[1],
                                      dz ? s.hi[2] : s.lo[2]);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
}

bool all_finite(const ScalarGrid& g) {
    for (double v : g.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const VectorGrid& g) {
    for (double v : g.data)
        if (!std::isfinite(v)) return false;
    return true;
}

double min_value(const ScalarGrid& g) {
    return *std::min_element(g.data.begin(), g.data.end());
}

double max_value(const ScalarGrid& g) {
    return *std::max_element(g.data.begin(), g.data.end());
}

double max_abs_component(const VectorGrid& g) {
    double m = 0.0;
    for (double v : g.data) m = std::max(m, std::abs(v));
    return m;
}

void require_same_res(const GridDims& a, const GridDims& b, const char* what) {
    if (!(a == b)) {
        throw ShapeError(std::string(what) + ": resolution mismatch (" +
                         std::to_string(a.nx) + "x" + std::to_string(a.ny) + "x" +
                         std::to_string(a.nz) + " vs " + std::to_string(b.nx) + "x" +
                         std::to_string(b.ny) + "x" + std::to_string(b.nz) + ")");
    }
}

} // namespace voltrans
