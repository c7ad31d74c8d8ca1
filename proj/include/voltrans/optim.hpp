#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"
#include "voltrans/loss.hpp"
#include "voltrans/potential.hpp"
#include "voltrans/render.hpp"
#include "voltrans/tape.hpp"

namespace voltrans {

// ---------------------------------------------------------------------------
// Learning-rate decay: base / (1 + (iteration - offset) * decay).
// ---------------------------------------------------------------------------

double lr_decay(double base_lr, long iteration, long offset, double decay);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Per-parameter-tensor moment accumulators.
struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

/// Bias-corrected Adam update in place. Throws NumericError naming the
/// parameter on non-finite gradients, ShapeError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg, const std::string& param_name);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

using LeafValue = std::variant<ScalarGrid, VectorGrid>;

/// Builds the objective on the tape from the registered leaves and returns
/// the scalar root node.
using ObjectiveBuilder = std::function<Value(Tape&, const std::vector<Value>&)>;

struct GradCheckOptions {
    double h = 1e-5;
    int samples_per_leaf = 24;
    int min_total_samples = 64;
    std::uint64_t seed = 12345;
    /// relative-error denominator floor; coordinates whose gradient magnitude
    /// sits below it are compared absolutely against it
    double denom_floor = 1e-6;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    int worst_leaf = -1;
    std::size_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    int samples = 0;
};

/// Central-difference comparison of the tape gradient over a seeded random
/// coordinate subset (>= min_total_samples overall). Deterministic for a
/// fixed seed, including the reported worst coordinate.
GradCheckResult gradcheck(const ObjectiveBuilder& fn, const std::vector<LeafValue>& point,
                          const GradCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Single-scene reconstruction
// ---------------------------------------------------------------------------

struct ReconFlags {
    bool paper_backward = false;  // image-formation backward via inverse projection
    bool clamp_density = false;   // re-clamp densities >= 0 after each advection
    bool cfl_per_level = true;    // speed-limit loss per residual level vs composed
};

struct ReconSchedule {
    int total_iters = 600;
    std::vector<int> level_growth;               // iteration at which each finer level joins
    std::vector<std::pair<int, int>> frame_growth; // (iteration, active transport steps)
};

struct ReconConfig {
    int levels = 4;
    LossWeights weights;
    double lr = 0.02;
    double lr_decay_rate = 2e-4;
    long lr_decay_offset = -5000;
    AdamConfig adam;
    ReconSchedule schedule;
    ReconFlags flags;
    RenderParams render;            // render.light_gradients toggles the light path
    int depth_axis = 2;
    double center_z = -1.0;         // < 0: domain midpoint along depth_axis
    double rho0_raw_init = -4.0;    // softplus-raw initialisation of the first frame
    std::uint64_t seed = 1;
    int log_every = 1;
};

struct ReconProblem {
    GridDims res;
    LightConfig light;
    Camera input_camera;
    std::vector<Image> input_frames;                            // I^0..I^T
    std::vector<std::pair<Camera, std::vector<Image>>> extra_views; // optional side targets
    Image background;                                           // empty -> black
    std::vector<ScalarGrid> prototypes;                         // optional, size T+1
    ReconConfig config;

    int steps() const { return static_cast<int>(input_frames.size()) - 1; }
    void validate(const std::string& source = "<recon problem>") const;
};

struct IterationLog {
    int iter = 0;
    double lr = 0.0;
    double total = 0.0;
    LossBreakdown terms;
    double max_interior_div = 0.0; // over the velocities of this iteration
    double max_speed = 0.0;        // largest |component| over composed velocities
    int active_levels = 1;
    int active_steps = 1;
};

struct ReconResult {
    ScalarGrid rho0;
    std::vector<MultiScalePotential> potentials; // one per transport step
    std::vector<VectorGrid> velocities;          // composed curls
    std::vector<ScalarGrid> frames;              // rho^0..rho^T of the final forward pass
    std::vector<IterationLog> log;
    bool diverged = false;
    double input_rmse = 0.0; // mean over frames against the input view
};

/// Direct gradient optimization of the first density and the per-step
/// multi-scale potentials against the image targets, coarse to fine.
ReconResult reconstruct(const ReconProblem& problem);

/// Objective used by reconstruct, exposed as a gradcheck target; the leaf
/// layout is [rho_raw, then config.levels potential grids per transport step].
ObjectiveBuilder recon_objective_builder(ReconProblem problem);

/// Self-contained problem + parameter point for gradient checking: smooth
/// density and gentle potentials, re-seeded until no limiter clamp and no
/// interpolation kink sits within finite-difference reach.
struct GradCheckScene {
    ReconProblem problem;
    std::vector<LeafValue> point;
};
GradCheckScene make_gradcheck_scene(int size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// View ablation harness
// ---------------------------------------------------------------------------

/// Ground-truth scene material the ablation compares against.
struct AblationScene {
    GridDims res;
    LightConfig light;
    double render_step = 0.5;
    std::vector<Camera> cameras;
    std::vector<std::vector<Image>> views; // [camera][frame 0..T]
    std::vector<ScalarGrid> gt_densities;  // frame 0..T
};

struct AblationVariant {
    std::string name;
    std::vector<int> camera_indices; // first entry is the input view
    bool center_loss = true;
};

struct AblationRun {
    std::string name;
    double input_rmse = 0.0;
    double heldout_rmse = 0.0;
    double volume_rmse = 0.0;
    double centroid_depth_dev = 0.0; // mean |centroid_z - c_z| over frames
    double max_speed = 0.0;
    double max_interior_div = 0.0;
};

struct AblationReport {
    std::vector<AblationRun> runs;
};

AblationReport ablate_views(const AblationScene& scene, const ReconConfig& base_config,
                            const std::vector<AblationVariant>& variants, int heldout_camera);

} // namespace voltrans
