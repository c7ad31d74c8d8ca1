#include "voltrans/synth.hpp"

#include <cmath>
#include <numbers>

#include "voltrans/io.hpp"
#include "voltrans/json_io.hpp"
#include "voltrans/potential.hpp"
#include "voltrans/rng.hpp"
#include "voltrans/transport.hpp"

namespace voltrans {

VectorGrid gen_potential_noise(const GridDims& res, std::uint64_t seed, int octaves,
                               double amplitude) {
    if (!(amplitude > 0.0)) throw Error("gen_potential_noise: amplitude must be > 0");
    if (octaves < 1) throw Error("gen_potential_noise: need at least one octave");
    const int div = 1 << octaves;
    if (res.nx % div || res.ny % div || res.nz % div)
        throw ShapeError("gen_potential_noise: resolution must be divisible by 2^octaves");

    VectorGrid total(res);
    for (int o = 0; o < octaves; ++o) {
        const int shift = octaves - o;
        VectorGrid lattice(GridDims{res.nx >> shift, res.ny >> shift, res.nz >> shift});
        for (std::size_t n = 0; n < lattice.res.cells(); ++n)
            for (int c = 0; c < 3; ++c) {
                const std::uint64_t h = hash_combine(
                    hash_combine(seed, static_cast<std::uint64_t>(o) * 4 + c), n);
                // uniform in [-1, 1]
                lattice.data[3 * n + c] =
                    static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
            }
        VectorGrid up = lattice;
        for (int s = 0; s < shift; ++s) up = upsample_bspline2(up);
        const double w = std::pow(0.5, o);
        for (std::size_t n = 0; n < total.data.size(); ++n) total.data[n] += w * up.data[n];
    }
    for (double& v : total.data) v *= amplitude;
    return total;
}

void PlumeConfig::validate(const std::string& source) const {
    auto bad = [&](const std::string& field, const std::string& why) {
        throw ConfigError(source, field, why);
    };
    if (res.nx <= 0 || res.ny <= 0 || res.nz <= 0) bad("resolution", "must be positive");
    if (frames < 0) bad("frames", "must be >= 0");
    if (!(blob_sigma > 0.0)) bad("blob_sigma", "must be > 0");
    if (rise_speed < 0.0) bad("rise_speed", "must be >= 0");
    if (noise_amplitude < 0.0) bad("noise_amplitude", "must be >= 0");
    if (rise_speed + noise_amplitude > max_speed + 1e-12)
        bad("max_speed", "must cover rise_speed + noise_amplitude");
    if (camera_angles_deg.empty()) bad("camera_angles", "need at least one view");
    if (image_width <= 0 || image_height <= 0) bad("image_res", "must be positive");
}

Camera orbit_camera(const GridDims& res, double angle_deg, int width, int height,
                    double fov_y_deg) {
    const Vec3 center{0.5 * res.nx, 0.5 * res.ny, 0.5 * res.nz};
    const double a = angle_deg * std::numbers::pi / 180.0;
    // 0 degrees places the camera on the -z side looking along +z
    const Vec3 offset{std::sin(a), 0.0, -std::cos(a)};
    const double tan_half = std::tan(fov_y_deg * std::numbers::pi / 360.0);
    const double half_extent = 0.62 * std::max({res.nx, res.ny, res.nz});
    const double radius = half_extent / tan_half + 0.5 * std::max({res.nx, res.ny, res.nz});

    Camera cam;
    cam.position = center + radius * offset;
    cam.forward = normalized(center - cam.position);
    cam.up = Vec3{0.0, 1.0, 0.0};
    cam.fov_y_deg = fov_y_deg;
    cam.width = width;
    cam.height = height;
    const double diag = norm(Vec3{static_cast<double>(res.nx), static_cast<double>(res.ny),
                                  static_cast<double>(res.nz)});
    cam.near = std::max(0.0, radius - diag);
    cam.far = radius + diag;
    validate_camera(cam);
    return cam;
}

PlumeScene gen_plume_sequence(const PlumeConfig& config) {
    config.validate();
    PlumeScene scene;
    scene.config = config;
    const GridDims& res = config.res;

    // initial blob near the bottom inflow
    ScalarGrid rho0(res);
    const Vec3 c{config.blob_center_rel.x * res.nx, config.blob_center_rel.y * res.ny,
                 config.blob_center_rel.z * res.nz};
    const double inv2s2 = 1.0 / (2.0 * config.blob_sigma * config.blob_sigma);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i) {
                const Vec3 p = res.cell_center(i, j, k);
                const Vec3 d = p - c;
                rho0.at(i, j, k) = config.blob_amplitude * std::exp(-dot(d, d) * inv2s2);
            }
    scene.densities.push_back(std::move(rho0));

    // rising base potential: P_x linear in z gives a uniform upward velocity
    VectorGrid base(res);
    for (int k = 0; k < res.nz; ++k)
        for (int j = 0; j < res.ny; ++j)
            for (int i = 0; i < res.nx; ++i)
                base.at(i, j, k, 0) = config.rise_speed * (k + 0.5);

    // two noise endpoint potentials blended across the sequence; the blend is
    // a convex combination, so the rescaled cap holds for every step
    VectorGrid noise_a(res), noise_b(res);
    double noise_scale = 1.0;
    if (config.noise_amplitude > 0.0 && config.frames > 0) {
        noise_a = gen_potential_noise(res, config.seed * 2 + 1, config.noise_octaves, 1.0);
        noise_b = gen_potential_noise(res, config.seed * 2 + 2, config.noise_octaves, 1.0);
        const double peak =
            std::max(max_abs_component(curl(noise_a)), max_abs_component(curl(noise_b)));
        if (peak > 0.0) noise_scale = config.noise_amplitude / peak;
    }

    for (int t = 0; t < config.frames; ++t) {
        VectorGrid pot = base;
        if (config.noise_amplitude > 0.0) {
            const double alpha =
                config.frames > 1 ? static_cast<double>(t) / (config.frames - 1) : 0.0;
            for (std::size_t n = 0; n < pot.data.size(); ++n)
                pot.data[n] += noise_scale * ((1.0 - alpha) * noise_a.data[n] +
                                              alpha * noise_b.data[n]);
        }
        scene.velocities.push_back(curl(pot));
        scene.densities.push_back(
            advect_maccormack(scene.densities.back(), scene.velocities.back()));
    }

    for (double angle : config.camera_angles_deg)
        scene.cameras.push_back(
            orbit_camera(res, angle, config.image_width, config.image_height, config.fov_y_deg));

    const RenderParams params{config.step, true};
    scene.renders.resize(scene.cameras.size());
    for (std::size_t ci = 0; ci < scene.cameras.size(); ++ci) {
        scene.renders[ci].reserve(scene.densities.size());
        for (const ScalarGrid& rho : scene.densities)
            scene.renders[ci].push_back(
                render(rho, config.light, scene.cameras[ci], nullptr, params));
    }
    return scene;
}

PlumeConfig plume_config_from_json_file(const std::filesystem::path& path) {
    const nlohmann::json j = load_json_file(path);
    const std::string file = path.string();
    PlumeConfig cfg;
    if (j.contains("resolution")) {
        const auto& r = j.at("resolution");
        if (!r.is_array() || r.size() != 3)
            throw ConfigError(file, "resolution", "expected [nx, ny, nz]");
        cfg.res = GridDims{r[0].get<int>(), r[1].get<int>(), r[2].get<int>()};
    }
    cfg.frames = json_get_or(j, file, "frames", cfg.frames);
    cfg.seed = json_get_or<std::uint64_t>(j, file, "seed", cfg.seed);
    if (j.contains("blob")) {
        const auto& b = j.at("blob");
        if (b.contains("center_rel"))
            cfg.blob_center_rel = vec3_from_json(b.at("center_rel"), file, "blob.center_rel");
        cfg.blob_sigma = b.value("sigma", cfg.blob_sigma);
        cfg.blob_amplitude = b.value("amplitude", cfg.blob_amplitude);
    }
    cfg.rise_speed = json_get_or(j, file, "rise_speed", cfg.rise_speed);
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        cfg.noise_octaves = n.value("octaves", cfg.noise_octaves);
        cfg.noise_amplitude = n.value("amplitude", cfg.noise_amplitude);
    }
    cfg.max_speed = json_get_or(j, file, "max_speed", cfg.max_speed);
    if (j.contains("camera_angles_deg"))
        cfg.camera_angles_deg = j.at("camera_angles_deg").get<std::vector<double>>();
    if (j.contains("image_res")) {
        const auto& r = j.at("image_res");
        if (!r.is_array() || r.size() != 2)
            throw ConfigError(file, "image_res", "expected [width, height]");
        cfg.image_width = r[0].get<int>();
        cfg.image_height = r[1].get<int>();
    }
    cfg.fov_y_deg = json_get_or(j, file, "fov_y", cfg.fov_y_deg);
    if (j.contains("light")) cfg.light = light_from_json(j.at("light"), file);
    cfg.step = json_get_or(j, file, "step_size", cfg.step);
    cfg.validate(file);
    return cfg;
}

namespace {

std::string frame_name(const char* prefix, int t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, t, ext);
    return buf;
}

} // namespace

void write_scene(const std::filesystem::path& dir, const PlumeScene& scene) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["resolution"] = {scene.config.res.nx, scene.config.res.ny, scene.config.res.nz};
    manifest["frames"] = scene.config.frames;
    manifest["seed"] = scene.config.seed;
    manifest["step_size"] = scene.config.step;
    manifest["light"] = light_to_json(scene.config.light);
    manifest["background"] = "black";

    nlohmann::json densities = nlohmann::json::array();
    for (std::size_t t = 0; t < scene.densities.size(); ++t) {
        const std::string name = frame_name("density", static_cast<int>(t), "vgrid");
        write_vgrid(dir / name, scene.densities[t]);
        densities.push_back(name);
    }
    manifest["densities"] = densities;

    nlohmann::json velocities = nlohmann::json::array();
    for (std::size_t t = 0; t < scene.velocities.size(); ++t) {
        const std::string name = frame_name("velocity", static_cast<int>(t), "vgrid");
        write_vgrid(dir / name, scene.velocities[t]);
        velocities.push_back(name);
    }
    manifest["velocities"] = velocities;

    nlohmann::json cams = nlohmann::json::array();
    for (std::size_t ci = 0; ci < scene.cameras.size(); ++ci) {
        nlohmann::json jc = camera_to_json(scene.cameras[ci]);
        jc["angle_deg"] = scene.config.camera_angles_deg[ci];
        const std::string sub = "cam" + std::to_string(ci);
        std::filesystem::create_directories(dir / sub);
        nlohmann::json renders = nlohmann::json::array();
        for (std::size_t t = 0; t < scene.renders[ci].size(); ++t) {
            const std::string name = sub + "/" + frame_name("frame", static_cast<int>(t), "pfm");
            write_pfm(dir / name, scene.renders[ci][t]);
            write_png8(dir / (sub + "/" + frame_name("frame", static_cast<int>(t), "png")),
                       scene.renders[ci][t]);
            renders.push_back(name);
        }
        jc["renders"] = renders;
        cams.push_back(jc);
    }
    manifest["cameras"] = cams;
    save_json_file(dir / "manifest.json", manifest);
}

ScalarGrid SceneData::density(int frame) const {
    return read_vgrid_scalar(density_paths.at(static_cast<std::size_t>(frame)));
}

VectorGrid SceneData::velocity(int step_index) const {
    return read_vgrid_vector(velocity_paths.at(static_cast<std::size_t>(step_index)));
}

Image SceneData::view(int camera, int frame) const {
    return read_pfm(render_paths.at(static_cast<std::size_t>(camera))
                        .at(static_cast<std::size_t>(frame)));
}

SceneData load_scene(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    const nlohmann::json m = load_json_file(manifest_path);
    const std::string file = manifest_path.string();
    SceneData scene;
    scene.dir = dir;
    const auto& r = m.at("resolution");
    scene.res = GridDims{r[0].get<int>(), r[1].get<int>(), r[2].get<int>()};
    scene.frames = json_get<int>(m, file, "frames");
    scene.light = light_from_json(m.at("light"), file);
    scene.step = json_get_or(m, file, "step_size", 0.5);
    for (const auto& name : m.at("densities")) scene.density_paths.push_back(dir / name.get<std::string>());
    if (m.contains("velocities"))
        for (const auto& name : m.at("velocities"))
            scene.velocity_paths.push_back(dir / name.get<std::string>());
    for (const auto& jc : m.at("cameras")) {
        scene.cameras.push_back(camera_from_json(jc, file));
        std::vector<std::filesystem::path> paths;
        for (const auto& name : jc.at("renders")) paths.push_back(dir / name.get<std::string>());
        scene.render_paths.push_back(std::move(paths));
    }
    return scene;
}

} // namespace voltrans
