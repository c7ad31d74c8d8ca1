#pragma once

#include "voltrans/errors.hpp"
#include "voltrans/vec3.hpp"

namespace voltrans {

struct Ray {
    Vec3 origin;
    Vec3 dir; // unit length
};

/// Pinhole camera. forward/up must be orthonormal; fov_y is the full vertical
/// field of view in degrees. Rays are cast through pixel centers; pixel (0,0)
/// is the top-left corner of the image.
struct Camera {
    Vec3 position;
    Vec3 forward{0, 0, 1};
    Vec3 up{0, 1, 0};
    double fov_y_deg = 45.0;
    int width = 64, height = 64;
    double near = 0.0;
    double far = 1e9;

    Vec3 right() const { return cross(forward, up); }
};

/// Throws ConfigError if the basis is not orthonormal (tolerance 1e-9), the
/// field of view is outside (0, 180) degrees, or near >= far.
void validate_camera(const Camera& cam, const std::string& source = "<camera>");

/// Ray through the center of pixel (px, py). The center pixel of an odd
/// resolution image maps exactly onto cam.forward.
Ray pixel_ray(const Camera& cam, int px, int py);

} // namespace voltrans
