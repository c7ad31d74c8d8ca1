#pragma once

#include <span>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"
#include "voltrans/render.hpp"

namespace voltrans {

/// Weights of the combined objective. Defaults are the velocity-stage
/// weights: target 1, proxy 1e-3, discriminator 2e-6, center 1e-3,
/// speed-limit 0.1, smoothness 1e-4.
struct LossWeights {
    double target = 1.0;
    double proxy = 1e-3;
    double disc = 2e-6;
    double center = 1e-3;
    double cfl = 0.1;
    double smooth = 1e-4;
};

// Every loss is >= 0 and vanishes exactly on its zero set; gradients use a
// zero subgradient at max() kinks.

/// Mean squared difference over all pixels and channels.
double mse(const Image& a, const Image& b);
/// d mse / d a = 2 (a - b) / N.
Image mse_gradient(const Image& a, const Image& b);

double mse(const ScalarGrid& a, const ScalarGrid& b);
ScalarGrid mse_gradient(const ScalarGrid& a, const ScalarGrid& b);

/// Image-space matching term: mse(render(rho), target).
double target_loss(const ScalarGrid& rho, const Image& target, const LightConfig& light,
                   const Camera& cam, const Image* background, const RenderParams& params);

/// Depth compactness term: sum over cells of rho^2 * ((c_z - p_z) * 2/r)^2
/// where p_z is the cell center coordinate along depth_axis and r the grid
/// resolution along it, so the weight reaches 1 at the domain boundary.
double center_loss(const ScalarGrid& rho, int depth_axis, double c_z);
ScalarGrid center_loss_gradient(const ScalarGrid& rho, int depth_axis, double c_z);

/// Soft volumetric guidance: mse against a prototype volume.
inline double proxy_loss(const ScalarGrid& rho, const ScalarGrid& proto) {
    return mse(rho, proto);
}
inline ScalarGrid proxy_loss_gradient(const ScalarGrid& rho, const ScalarGrid& proto) {
    return mse_gradient(rho, proto);
}

/// Speed-limit term: mean over cells of sum_c max(u_c^2 - 1, 0); only
/// components beyond one cell per step contribute.
double cfl_loss(const VectorGrid& u);
VectorGrid cfl_loss_gradient(const VectorGrid& u);

/// First-order smoothness: mean over cells of the summed squared forward
/// differences of every component along every axis.
double smoothness_loss(const VectorGrid& u);
VectorGrid smoothness_loss_gradient(const VectorGrid& u);

/// Relativistic average least-squares score: label +1 when training the
/// critic, -1 when used as a generator loss. Pure function over externally
/// supplied score lists.
double ralsgan(std::span<const double> scores_real, std::span<const double> scores_fake,
               double label);

/// Weighted total with the per-term breakdown used for logging.
struct LossBreakdown {
    double target = 0.0, proxy = 0.0, disc = 0.0, center = 0.0, cfl = 0.0, smooth = 0.0;
    double weighted_total(const LossWeights& w) const {
        return w.target * target + w.proxy * proxy + w.disc * disc + w.center * center +
               w.cfl * cfl + w.smooth * smooth;
    }
    LossBreakdown& operator+=(const LossBreakdown& o) {
        target += o.target;
        proxy += o.proxy;
        disc += o.disc;
        center += o.center;
        cfl += o.cfl;
        smooth += o.smooth;
        return *this;
    }
};

} // namespace voltrans
