#include "voltrans/camera.hpp"

#include <cmath>
#include <numbers>

namespace voltrans {

void validate_camera(const Camera& cam, const std::string& source) {
    auto bad = [&](const std::string& field, const std::string& why) {
        throw ConfigError(source, field, why);
    };
    if (std::abs(norm(cam.forward) - 1.0) > 1e-9) bad("forward", "must be unit length");
    if (std::abs(norm(cam.up) - 1.0) > 1e-9) bad("up", "must be unit length");
    if (std::abs(dot(cam.forward, cam.up)) > 1e-9) bad("up", "must be orthogonal to forward");
    if (!(cam.fov_y_deg > 0.0 && cam.fov_y_deg < 180.0)) bad("fov_y", "must be in (0, 180) degrees");
    if (!(cam.near < cam.far)) bad("near", "must be smaller than far");
    if (cam.width <= 0 || cam.height <= 0) bad("image_res", "must be positive");
}

Ray pixel_ray(const Camera& cam, int px, int py) {
    const double tan_half = std::tan(cam.fov_y_deg * std::numbers::pi / 360.0);
    const double aspect = static_cast<double>(cam.width) / cam.height;
    // ndc in (-1, 1), y up
    const double sx = ((px + 0.5) / cam.width * 2.0 - 1.0) * tan_half * aspect;
    const double sy = (1.0 - (py + 0.5) / cam.height * 2.0) * tan_half;
    const Vec3 d = cam.forward + sx * cam.right() + sy * cam.up;
    return Ray{cam.position, normalized(d)};
}

} // namespace voltrans
