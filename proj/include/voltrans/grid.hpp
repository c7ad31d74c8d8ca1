#pragma once

#include <cstdint>
#include <vector>

#include "voltrans/errors.hpp"
#include "voltrans/vec3.hpp"

namespace voltrans {

/// Grid resolution in cells. All grids are cell-centered: the value stored at
/// index (i,j,k) lives at continuous coordinate (i+0.5, j+0.5, k+0.5), and the
/// domain covers [0,nx] x [0,ny] x [0,nz] in grid units (one cell = one world
/// unit by default).
struct GridDims {
    int nx = 0, ny = 0, nz = 0;

    bool operator==(const GridDims&) const = default;

    std::size_t cells() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    /// Flat index, x fastest: ((z*ny + y)*nx + x).
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    bool contains(int i, int j, int k) const {
        return i >= 0 && i < nx && j >= 0 && j < ny && k >= 0 && k < nz;
    }
    Vec3 cell_center(int i, int j, int k) const {
        return {i + 0.5, j + 0.5, k + 0.5};
    }
};

/// Dense scalar field (density, lighting, ...). Double precision in memory;
/// file serialization narrows to float32.
struct ScalarGrid {
    GridDims res;
    Vec3 extent;                // physical size per axis; defaults to res (unit cells)
    std::vector<double> data;

    ScalarGrid() = default;
    explicit ScalarGrid(GridDims r, double fill = 0.0)
        : res(r), extent(static_cast<double>(r.nx), static_cast<double>(r.ny),
                         static_cast<double>(r.nz)),
          data(r.cells(), fill) {}
    ScalarGrid(int nx, int ny, int nz, double fill = 0.0)
        : ScalarGrid(GridDims{nx, ny, nz}, fill) {}

    double& at(int i, int j, int k) { return data[res.index(i, j, k)]; }
    double at(int i, int j, int k) const { return data[res.index(i, j, k)]; }
    std::size_t size() const { return data.size(); }
};

/// Dense 3-component field (velocity, vector potential). Channel-interleaved:
/// data[index*3 + c].
struct VectorGrid {
    GridDims res;
    Vec3 extent;
    std::vector<double> data;

    VectorGrid() = default;
    explicit VectorGrid(GridDims r, Vec3 fill = {})
        : res(r), extent(static_cast<double>(r.nx), static_cast<double>(r.ny),
                         static_cast<double>(r.nz)),
          data(r.cells() * 3, 0.0) {
        if (fill.x != 0.0 || fill.y != 0.0 || fill.z != 0.0) {
            for (std::size_t n = 0; n < r.cells(); ++n) {
                data[3 * n + 0] = fill.x;
                data[3 * n + 1] = fill.y;
                data[3 * n + 2] = fill.z;
            }
        }
    }
    VectorGrid(int nx, int ny, int nz, Vec3 fill = {})
        : VectorGrid(GridDims{nx, ny, nz}, fill) {}

    double& at(int i, int j, int k, int c) { return data[res.index(i, j, k) * 3 + c]; }
    double at(int i, int j, int k, int c) const { return data[res.index(i, j, k) * 3 + c]; }
    Vec3 vec_at(int i, int j, int k) const {
        std::size_t n = res.index(i, j, k) * 3;
        return {data[n], data[n + 1], data[n + 2]};
    }
    void set_vec(int i, int j, int k, const Vec3& v) {
        std::size_t n = res.index(i, j, k) * 3;
        data[n] = v.x;
        data[n + 1] = v.y;
        data[n + 2] = v.z;
    }
    std::size_t size() const { return data.size(); }
};

// ---------------------------------------------------------------------------
// Trilinear sampling with clamp-to-edge boundary handling.
//
// Out-of-domain coordinates clamp to the nearest boundary cell center, so the
// sampled field is constant beyond the outer cell layer (open boundaries).
// ---------------------------------------------------------------------------

/// Per-axis interpolation stencil for one sample position.
struct TrilinearStencil {
    int lo[3];        // lower cell index per axis (clamped to [0, n-1])
    int hi[3];        // upper cell index per axis
    double frac[3];   // fractional weight of the upper cell
    bool interior[3]; // false where the coordinate was clamped to the edge
};

TrilinearStencil trilinear_stencil(const GridDims& res, const Vec3& p);

double sample_trilinear(const ScalarGrid& g, const Vec3& p);
Vec3 sample_trilinear(const VectorGrid& g, const Vec3& p);

/// Derivative of sample_trilinear(g, p) with respect to p. Axes that clamped
/// to the edge get a zero component (the sample is constant there).
Vec3 sample_position_gradient(const ScalarGrid& g, const Vec3& p);

/// Adjoint of scalar sampling: distributes w onto the 8 stencil cells.
void scatter_trilinear(ScalarGrid& into, const Vec3& p, double w);

/// Min/max of the 8 stencil corner values (the interpolant range at p).
void trilinear_corner_range(const ScalarGrid& g, const Vec3& p, double& lo, double& hi);

// ---------------------------------------------------------------------------
// Small whole-grid helpers.
// ---------------------------------------------------------------------------

bool all_finite(const ScalarGrid& g);
bool all_finite(const VectorGrid& g);
double min_value(const ScalarGrid& g);
double max_value(const ScalarGrid& g);
/// Largest |component| over all cells.
double max_abs_component(const VectorGrid& g);

void require_same_res(const GridDims& a, const GridDims& b, const char* what);

} // namespace voltrans
