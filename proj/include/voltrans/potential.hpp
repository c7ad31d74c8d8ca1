#pragma once

#include <vector>

#include "voltrans/grid.hpp"

namespace voltrans {

// ---------------------------------------------------------------------------
// Discrete differential operators on cell-centered grids, unit cell spacing.
// Central differences in the interior, one-sided at the boundary layers.
// ---------------------------------------------------------------------------

/// u = curl(P). The interior divergence of the result vanishes to roundoff
/// because central difference stencils commute.
VectorGrid curl(const VectorGrid& P);

/// Transpose of curl (curl is linear).
VectorGrid curl_adjoint(const VectorGrid& grad_u);

ScalarGrid divergence(const VectorGrid& u);

/// Largest |divergence| over interior cells (one cell in from every face).
double max_interior_divergence(const VectorGrid& u);

// ---------------------------------------------------------------------------
// Factor-2 resampling between resolution levels.
//
// Upsampling evaluates an interpolation kernel at the fine cell centers with
// the coarse cells as control points, clamping control indices at the edges.
// The quadratic B-spline kernel yields a C1 field (no derivative jumps at
// former coarse-cell boundaries); the trilinear kernel is kept for
// comparison, its curl shows grid-aligned discontinuities.
// ---------------------------------------------------------------------------

ScalarGrid upsample_bspline2(const ScalarGrid& g);
VectorGrid upsample_bspline2(const VectorGrid& g);
ScalarGrid upsample_linear(const ScalarGrid& g);
VectorGrid upsample_linear(const VectorGrid& g);

ScalarGrid upsample_bspline2_adjoint(const ScalarGrid& grad_fine);
VectorGrid upsample_bspline2_adjoint(const VectorGrid& grad_fine);
ScalarGrid upsample_linear_adjoint(const ScalarGrid& grad_fine);
VectorGrid upsample_linear_adjoint(const VectorGrid& grad_fine);

/// Average pooling over 2x2x2 blocks; every axis must be even.
ScalarGrid downsample_avg(const ScalarGrid& g);
VectorGrid downsample_avg(const VectorGrid& g);
ScalarGrid downsample_avg_adjoint(const ScalarGrid& grad_coarse);
VectorGrid downsample_avg_adjoint(const VectorGrid& grad_coarse);

// ---------------------------------------------------------------------------
// Multi-scale residual potentials.
// ---------------------------------------------------------------------------

/// Residual vector potentials, coarsest level first; every level doubles the
/// per-axis resolution and the finest level matches the simulation grid.
struct MultiScalePotential {
    std::vector<VectorGrid> levels;
};

/// Dimensions of an n_levels ladder ending at `finest` (coarsest first).
/// Throws ShapeError when finest is not divisible by 2^(n_levels-1).
std::vector<GridDims> ladder_dims(const GridDims& finest, int n_levels);

void validate_ladder(const MultiScalePotential& msp);

/// Folds the levels into a single finest-resolution potential:
/// X_0 = P_0, X_l = upsample_bspline2(X_{l-1}) + P_l.
VectorGrid compose_multiscale(const MultiScalePotential& msp);

/// Transpose of compose_multiscale; returns one gradient per level.
std::vector<VectorGrid> compose_multiscale_adjoint(const VectorGrid& grad_finest,
                                                   const std::vector<GridDims>& dims);

} // namespace voltrans
