#pragma once

#include <limits>
#include <vector>

#include "voltrans/grid.hpp"

namespace voltrans {

/// Gradients of an advection step with respect to its two inputs.
struct AdvectGrads {
    ScalarGrid rho;
    VectorGrid u;
};

/// Diagnostics of a MacCormack step, used to keep finite-difference gradient
/// probes away from limiter and interpolation kinks.
struct MacCormackStats {
    // smallest |corrected - bound| over all cells; negative values never occur
    // because clamped cells sit exactly on the bound
    double min_clamp_margin = std::numeric_limits<double>::infinity();
    std::size_t clamped_cells = 0;
    // smallest distance of any backtrace coordinate to a cell face
    double min_face_distance = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Semi-Lagrangian advection: out(x) = rho(x - dt*u(x)) with trilinear lookup
// and clamp-to-edge open boundaries. u holds the velocity stored at the same
// cell centers as rho, in cells per time unit.
// ---------------------------------------------------------------------------

ScalarGrid advect_sl(const ScalarGrid& rho, const VectorGrid& u, double dt = 1.0);

/// Directional derivative of advect_sl at (rho, u) along (drho, du).
ScalarGrid advect_sl_jvp(const ScalarGrid& rho, const VectorGrid& u,
                         const ScalarGrid& drho, const VectorGrid& du, double dt = 1.0);

/// Vector-Jacobian product of advect_sl. Backtrace coordinates that clamped
/// to the domain edge contribute zero velocity gradient.
AdvectGrads advect_sl_adjoint(const ScalarGrid& grad_out, const ScalarGrid& rho,
                              const VectorGrid& u, double dt = 1.0);

// ---------------------------------------------------------------------------
// MacCormack advection: a forward and a backward semi-Lagrangian pass plus an
// error correction, clamped per cell to the range of the 8 interpolant corner
// values of the first pass. The clamp uses a pass-through/zero subgradient;
// cells exactly on the bound count as unclamped.
// ---------------------------------------------------------------------------

ScalarGrid advect_maccormack(const ScalarGrid& rho, const VectorGrid& u, double dt = 1.0,
                             MacCormackStats* stats = nullptr);

ScalarGrid advect_maccormack_jvp(const ScalarGrid& rho, const VectorGrid& u,
                                 const ScalarGrid& drho, const VectorGrid& du,
                                 double dt = 1.0);

AdvectGrads advect_maccormack_adjoint(const ScalarGrid& grad_out, const ScalarGrid& rho,
                                      const VectorGrid& u, double dt = 1.0);

/// rho^{t+1} = advect_maccormack(rho^t, velocities[t]); returns rho^1..rho^T.
std::vector<ScalarGrid> advect_sequence(const ScalarGrid& rho0,
                                        const std::vector<VectorGrid>& velocities,
                                        double dt = 1.0);

} // namespace voltrans
