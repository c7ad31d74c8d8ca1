#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"
#include "voltrans/render.hpp"

namespace voltrans {

/// Band-limited value-noise vector potential: per octave, a coarse lattice of
/// hashed uniform values in [-1,1] is raised to `res` through repeated
/// quadratic B-spline upsampling (so the curl is smooth), octave o scaled by
/// 0.5^o, and the sum scaled by `amplitude`. Deterministic in (seed, res).
VectorGrid gen_potential_noise(const GridDims& res, std::uint64_t seed, int octaves,
                               double amplitude);

/// Synthetic plume scene setup. Velocities are curls of a rising base
/// potential plus time-interpolated noise potentials, rescaled so no
/// component exceeds max_speed.
struct PlumeConfig {
    GridDims res{32, 48, 32};
    int frames = 5; // transport steps; the scene holds frames+1 densities
    std::uint64_t seed = 1;

    Vec3 blob_center_rel{0.5, 0.22, 0.5}; // relative to the domain
    double blob_sigma = 3.5;               // cells
    double blob_amplitude = 1.0;

    double rise_speed = 0.4;      // cells per step
    int noise_octaves = 2;
    double noise_amplitude = 0.3; // cap on |curl| of the noise part
    double max_speed = 0.9;       // overall per-component cap

    std::vector<double> camera_angles_deg{0.0, 90.0, 45.0, 135.0};
    int image_width = 64, image_height = 96;
    double fov_y_deg = 40.0;
    // keeps renders inside [0,1] for any density the transport can produce
    LightConfig light{{0.0, -1.0, 0.0}, 0.8, 0.1, 0.35};
    double step = 0.5; // render march step

    void validate(const std::string& source = "<plume config>") const;
};

struct PlumeScene {
    PlumeConfig config;
    std::vector<ScalarGrid> densities;    // rho^0 .. rho^T
    std::vector<VectorGrid> velocities;   // u^0 .. u^{T-1}
    std::vector<Camera> cameras;          // one per configured angle
    std::vector<std::vector<Image>> renders; // [camera][frame]
};

/// Camera on the orbit ring at `angle_deg` around the vertical axis through
/// the domain center (0 degrees looks along +z).
Camera orbit_camera(const GridDims& res, double angle_deg, int width, int height,
                    double fov_y_deg);

PlumeScene gen_plume_sequence(const PlumeConfig& config);

PlumeConfig plume_config_from_json_file(const std::filesystem::path& path);

/// Serializes volumes (.vgrid), renders (.pfm and .png) and manifest.json.
void write_scene(const std::filesystem::path& dir, const PlumeScene& scene);

/// Scene files on disk, as listed by a manifest.
struct SceneData {
    std::filesystem::path dir;
    GridDims res;
    int frames = 0;
    LightConfig light;
    double step = 0.5;
    std::vector<Camera> cameras;
    std::vector<std::filesystem::path> density_paths;
    std::vector<std::filesystem::path> velocity_paths;
    std::vector<std::vector<std::filesystem::path>> render_paths; // [camera][frame]

    ScalarGrid density(int frame) const;
    VectorGrid velocity(int step_index) const;
    Image view(int camera, int frame) const;
};

SceneData load_scene(const std::filesystem::path& dir);

} // namespace voltrans
