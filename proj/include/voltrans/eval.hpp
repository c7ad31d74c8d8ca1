#pragma once

#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"

namespace voltrans {

/// Root of the mean squared per-pixel difference.
double rmse_image(const Image& a, const Image& b);

/// Root of the mean squared per-cell difference.
double rmse_volume(const ScalarGrid& a, const ScalarGrid& b);

/// Mean Euclidean norm of the per-cell velocity difference, optionally
/// restricted to cells where mask > threshold (no cell qualifying -> 0).
double endpoint_error(const VectorGrid& u, const VectorGrid& u_ref,
                      const ScalarGrid* mask = nullptr, double mask_threshold = 1e-3);

/// Component-wise velocity rmse over all cells.
double rmse_velocity(const VectorGrid& u, const VectorGrid& u_ref);

/// Density-weighted mean coordinate along an axis (cell-center convention).
/// Zero-mass grids report the domain midpoint.
double density_centroid(const ScalarGrid& rho, int axis);

/// Largest |second difference| of any velocity component along any axis.
/// Curl fields built from linearly upsampled potentials spike at former
/// coarse-cell boundaries; quadratic B-spline upsampling keeps this small.
double max_second_difference(const VectorGrid& u);

} // namespace voltrans
