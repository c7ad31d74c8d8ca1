#pragma once

#include <optional>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"

namespace voltrans {

/// Directional light with an ambient floor. absorption is the extinction
/// coefficient multiplying density in every transmittance term. Keeping
/// ambient + intensity <= 1 keeps renders of [0,1] backgrounds inside [0,1].
struct LightConfig {
    Vec3 direction{0.0, -1.0, 0.0}; // travel direction of the light, unit length
    double intensity = 0.9;
    double ambient = 0.1;
    double absorption = 1.0;
};

void validate_light(const LightConfig& light, const std::string& source = "<light>");

struct RenderParams {
    double step = 0.5;              // ray-march step in cells
    bool light_gradients = true;    // differentiate through the lighting volume
};

// ---------------------------------------------------------------------------
// Lighting volume: per cell, ambient + intensity * exp(-absorption * optical
// depth accumulated from the light entry boundary to the cell), marching with
// unit steps. Axis-aligned directions run on an exact per-column recurrence.
// ---------------------------------------------------------------------------

ScalarGrid build_light_volume(const ScalarGrid& rho, const LightConfig& light);
ScalarGrid build_light_volume_adjoint(const ScalarGrid& grad_light, const ScalarGrid& rho,
                                      const LightConfig& light);
ScalarGrid build_light_volume_jvp(const ScalarGrid& drho, const ScalarGrid& rho,
                                  const LightConfig& light);

// ---------------------------------------------------------------------------
// Emission-absorption ray marching.
//
// Per pixel, march from near to far through the half-cell-inset domain
// (sampling stays inside the outer cell centers):
//   T = 1
//   out += L(x) * absorption * rho(x) * ds * T;  T *= exp(-absorption*rho*ds)
//   out += T_final * background
// A missing background renders onto black. The final partial step is
// shortened so the sampled path length matches the ray segment exactly.
// ---------------------------------------------------------------------------

Image render(const ScalarGrid& rho, const ScalarGrid& light_volume, const LightConfig& light,
             const Camera& cam, const Image* background, const RenderParams& params,
             Image* transmittance_out = nullptr);

/// Convenience wrapper that builds the light volume internally.
Image render(const ScalarGrid& rho, const LightConfig& light, const Camera& cam,
             const Image* background, const RenderParams& params,
             Image* transmittance_out = nullptr);

/// Gradients of render with respect to the density samples (split into the
/// direct view-ray path and the path through the lighting volume).
struct RenderGrads {
    ScalarGrid rho;         // direct dependency of the view rays on density
    ScalarGrid light_volume; // gradient w.r.t. the sampled lighting volume
};

RenderGrads render_adjoint(const Image& grad_img, const ScalarGrid& rho,
                           const ScalarGrid& light_volume, const LightConfig& light,
                           const Camera& cam, const Image* background,
                           const RenderParams& params);

Image render_jvp(const ScalarGrid& drho, const ScalarGrid& dlight, const ScalarGrid& rho,
                 const ScalarGrid& light_volume, const LightConfig& light, const Camera& cam,
                 const Image* background, const RenderParams& params);

/// Full gradient of render w.r.t. density, chaining the lighting volume path
/// when params.light_gradients is set.
ScalarGrid render_full_adjoint(const Image& grad_img, const ScalarGrid& rho,
                               const LightConfig& light, const Camera& cam,
                               const Image* background, const RenderParams& params);

Image render_full_jvp(const ScalarGrid& drho, const ScalarGrid& rho, const LightConfig& light,
                      const Camera& cam, const Image* background, const RenderParams& params);

// ---------------------------------------------------------------------------
// Inverse projection: march every pixel ray and scatter the pixel value onto
// the 8 surrounding voxels with trilinear weights; voxel values are the
// weighted sums normalized by the accumulated weights (zero where untouched).
// ---------------------------------------------------------------------------

ScalarGrid unproject(const Image& img, const Camera& cam, const GridDims& res,
                     double step = 0.5);

} // namespace voltrans
