#include "voltrans/render.hpp"

#include <algorithm>
#include <cmath>

#include "voltrans/threading.hpp"

namespace voltrans {

void validate_light(const LightConfig& light, const std::string& source) {
    if (std::abs(norm(light.direction) - 1.0) > 1e-9)
        throw ConfigError(source, "direction", "must be unit length");
    if (light.intensity < 0.0) throw ConfigError(source, "intensity", "must be >= 0");
    if (light.ambient < 0.0) throw ConfigError(source, "ambient", "must be >= 0");
    if (!(light.absorption > 0.0)) throw ConfigError(source, "absorption", "must be > 0");
}

namespace {

// Sampling stays inside the outer cell centers; rendering marches only
// through this inset box to avoid boundary falloff artifacts.
struct Box {
    Vec3 lo, hi;
};

Box inset_box(const GridDims& res) {
    return {{0.5, 0.5, 0.5},
            {res.nx - 0.5, res.ny - 0.5, res.nz - 0.5}};
}

Box full_box(const GridDims& res) {
    return {{0.0, 0.0, 0.0},
            {static_cast<double>(res.nx), static_cast<double>(res.ny),
             static_cast<double>(res.nz)}};
}

bool intersect(const Box& b, const Ray& r, double& t0, double& t1) {
    t0 = -1e300;
    t1 = 1e300;
    for (int a = 0; a < 3; ++a) {
        const double o = r.origin[a], d = r.dir[a];
        if (d == 0.0) {
            if (o < b.lo[a] || o > b.hi[a]) return false;
            continue;
        }
        double ta = (b.lo[a] - o) / d;
        double tb = (b.hi[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t1 > t0;
}

inline bool inside(const Box& b, const Vec3& p) {
    return p.x >= b.lo.x && p.x <= b.hi.x && p.y >= b.lo.y && p.y <= b.hi.y &&
           p.z >= b.lo.z && p.z <= b.hi.z;
}

// walk the ray segment [t0, t1] in steps of `step` (last one shortened) and
// call fn(position, segment_length) at each segment midpoint
template <class F>
void march(const Ray& ray, double t0, double t1, double step, F&& fn) {
    double remaining = t1 - t0;
    double t = t0;
    while (remaining > 1e-9) {
        const double seg = std::min(step, remaining);
        fn(ray.origin + (t + 0.5 * seg) * ray.dir, seg);
        t += seg;
        remaining -= seg;
    }
}

bool clipped_segment(const Box& box, const Camera& cam, const Ray& ray, double& t0, double& t1) {
    if (!intersect(box, ray, t0, t1)) return false;
    t0 = std::max(t0, cam.near);
    t1 = std::min(t1, cam.far);
    return t1 > t0;
}

int axis_aligned_dir(const Vec3& d) {
    // returns axis*2 + (negative ? 1 : 0), or -1 for general directions
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 1.0 || d[a] == -1.0) {
            const int b = (a + 1) % 3, c = (a + 2) % 3;
            if (d[b] == 0.0 && d[c] == 0.0) return a * 2 + (d[a] < 0.0 ? 1 : 0);
        }
    }
    return -1;
}

constexpr std::int64_t kPixelGrain = 512;

} // namespace

// ---------------------------------------------------------------------------
// Lighting volume
// ---------------------------------------------------------------------------

namespace {

// visit every grid line along `axis`, in light travel order; fn(line) where
// line(m) is the flat index of the m-th cell downstream from the entry face.
// fn runs once per line so per-line marching state stays thread local.
template <class F>
void for_each_light_line(const GridDims& res, int axis, bool negative, F&& fn) {
    const int dims[3] = {res.nx, res.ny, res.nz};
    const std::size_t strides[3] = {1, static_cast<std::size_t>(res.nx),
                                    static_cast<std::size_t>(res.nx) * res.ny};
    const int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
    const std::int64_t n_lines = static_cast<std::int64_t>(dims[oa]) * dims[ob];
    const int len = dims[axis];
    const std::size_t step = strides[axis];
    parallel_ranges(n_lines, 256, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t l = b; l < e; ++l) {
            const int ia = static_cast<int>(l % dims[oa]);
            const int ib = static_cast<int>(l / dims[oa]);
            const std::size_t base = ia * strides[oa] + ib * strides[ob];
            fn([=](int m) {
                const int idx = negative ? len - 1 - m : m;
                return base + static_cast<std::size_t>(idx) * step;
            });
        }
    });
}

} // namespace

ScalarGrid build_light_volume(const ScalarGrid& rho, const LightConfig& light) {
    ScalarGrid L(rho.res);
    const int aligned = axis_aligned_dir(light.direction);
    const double sigma = light.absorption;

    if (aligned >= 0) {
        // exact per-column recurrence: optical depth of a cell is the sum of
        // the upstream densities along the column
        const int axis = aligned / 2;
        const bool negative = aligned % 2;
        const int len = (axis == 0) ? rho.res.nx : (axis == 1) ? rho.res.ny : rho.res.nz;
        for_each_light_line(rho.res, axis, negative, [&](auto line) {
            double tau = 0.0;
            for (int m = 0; m < len; ++m) {
                const std::size_t n = line(m);
                L.data[n] = light.ambient + light.intensity * std::exp(-sigma * tau);
                tau += rho.data[n];
            }
        });
        return L;
    }

    const Box box = full_box(rho.res);
    const std::size_t cells = rho.res.cells();
    parallel_ranges(static_cast<std::int64_t>(cells), 2048, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t ni = b; ni < e; ++ni) {
            const std::size_t n = static_cast<std::size_t>(ni);
            const int i = static_cast<int>(n % rho.res.nx);
            const int j = static_cast<int>((n / rho.res.nx) % rho.res.ny);
            const int k = static_cast<int>(n / (static_cast<std::size_t>(rho.res.nx) * rho.res.ny));
            Vec3 pos = rho.res.cell_center(i, j, k);
            double tau = 0.0;
            for (int m = 1;; ++m) {
                const Vec3 p = pos - static_cast<double>(m) * light.direction;
                if (!inside(box, p)) break;
                tau += sample_trilinear(rho, p);
            }
            L.data[n] = light.ambient + light.intensity * std::exp(-sigma * tau);
        }
    });
    return L;
}

ScalarGrid build_light_volume_adjoint(const ScalarGrid& grad_light, const ScalarGrid& rho,
                                      const LightConfig& light) {
    require_same_res(grad_light.res, rho.res, "build_light_volume_adjoint");
    ScalarGrid grad_rho(rho.res);
    const double sigma = light.absorption;
    const int aligned = axis_aligned_dir(light.direction);

    if (aligned >= 0) {
        const int axis = aligned / 2;
        const bool negative = aligned % 2;
        // per column: grad_rho[j] = -sigma * sum over downstream cells of
        // grad_L * intensity * exp(-sigma*tau); do a forward pass for tau and
        // a backward suffix pass for the sum
        const int dims[3] = {rho.res.nx, rho.res.ny, rho.res.nz};
        const std::size_t strides[3] = {1, static_cast<std::size_t>(rho.res.nx),
                                        static_cast<std::size_t>(rho.res.nx) * rho.res.ny};
        const int oa = (axis + 1) % 3, ob = (axis + 2) % 3;
        const std::int64_t n_lines = static_cast<std::int64_t>(dims[oa]) * dims[ob];
        parallel_ranges(n_lines, 256, [&](std::int64_t b, std::int64_t e) {
            std::vector<double> dLdtau(static_cast<std::size_t>(dims[axis]));
            std::vector<std::size_t> order(static_cast<std::size_t>(dims[axis]));
            for (std::int64_t l = b; l < e; ++l) {
                const int ia = static_cast<int>(l % dims[oa]);
                const int ib = static_cast<int>(l / dims[oa]);
                const std::size_t base = ia * strides[oa] + ib * strides[ob];
                double tau = 0.0;
                for (int m = 0; m < dims[axis]; ++m) {
                    const int idx = negative ? dims[axis] - 1 - m : m;
                    const std::size_t n = base + static_cast<std::size_t>(idx) * strides[axis];
                    order[static_cast<std::size_t>(m)] = n;
                    dLdtau[static_cast<std::size_t>(m)] =
                        grad_light.data[n] * light.intensity * std::exp(-sigma * tau);
                    tau += rho.data[n];
                }
                double suffix = 0.0;
                for (int m = dims[axis] - 1; m >= 0; --m) {
                    grad_rho.data[order[static_cast<std::size_t>(m)]] = -sigma * suffix;
                    suffix += dLdtau[static_cast<std::size_t>(m)];
                }
            }
        });
        return grad_rho;
    }

    const Box box = full_box(rho.res);
    const std::size_t cells = rho.res.cells();
    parallel_scatter<ScalarGrid>(
        static_cast<std::int64_t>(cells), static_cast<std::int64_t>((cells + 7) / 8),
        [&]() { return ScalarGrid(rho.res); },
        [&](ScalarGrid& part, std::int64_t b, std::int64_t e) {
            for (std::int64_t ni = b; ni < e; ++ni) {
                const std::size_t n = static_cast<std::size_t>(ni);
                const int i = static_cast<int>(n % rho.res.nx);
                const int j = static_cast<int>((n / rho.res.nx) % rho.res.ny);
                const int k =
                    static_cast<int>(n / (static_cast<std::size_t>(rho.res.nx) * rho.res.ny));
                const Vec3 pos = rho.res.cell_center(i, j, k);
                double tau = 0.0;
                int m_end = 0;
                for (int m = 1;; ++m) {
                    const Vec3 p = pos - static_cast<double>(m) * light.direction;
                    if (!inside(box, p)) break;
                    tau += sample_trilinear(rho, p);
                    m_end = m;
                }
                const double f =
                    -sigma * grad_light.data[n] * light.intensity * std::exp(-sigma * tau);
                if (f == 0.0) continue;
                for (int m = 1; m <= m_end; ++m)
                    scatter_trilinear(part, pos - static_cast<double>(m) * light.direction, f);
            }
        },
        [&](ScalarGrid&& part) {
            for (std::size_t n = 0; n < cells; ++n) grad_rho.data[n] += part.data[n];
        });
    return grad_rho;
}

ScalarGrid build_light_volume_jvp(const ScalarGrid& drho, const ScalarGrid& rho,
                                  const LightConfig& light) {
    require_same_res(drho.res, rho.res, "build_light_volume_jvp");
    ScalarGrid dL(rho.res);
    const double sigma = light.absorption;
    const int aligned = axis_aligned_dir(light.direction);

    if (aligned >= 0) {
        const int axis = aligned / 2;
        const bool negative = aligned % 2;
        const int len = (axis == 0) ? rho.res.nx : (axis == 1) ? rho.res.ny : rho.res.nz;
        for_each_light_line(rho.res, axis, negative, [&](auto line) {
            double tau = 0.0, dtau = 0.0;
            for (int m = 0; m < len; ++m) {
                const std::size_t n = line(m);
                dL.data[n] = -sigma * dtau * light.intensity * std::exp(-sigma * tau);
                tau += rho.data[n];
                dtau += drho.data[n];
            }
        });
        return dL;
    }

    const Box box = full_box(rho.res);
    const std::size_t cells = rho.res.cells();
    parallel_ranges(static_cast<std::int64_t>(cells), 2048, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t ni = b; ni < e; ++ni) {
            const std::size_t n = static_cast<std::size_t>(ni);
            const int i = static_cast<int>(n % rho.res.nx);
            const int j = static_cast<int>((n / rho.res.nx) % rho.res.ny);
            const int k = static_cast<int>(n / (static_cast<std::size_t>(rho.res.nx) * rho.res.ny));
            const Vec3 pos = rho.res.cell_center(i, j, k);
            double tau = 0.0, dtau = 0.0;
            for (int m = 1;; ++m) {
                const Vec3 p = pos - static_cast<double>(m) * light.direction;
                if (!inside(box, p)) break;
                tau += sample_trilinear(rho, p);
                dtau += sample_trilinear(drho, p);
            }
            dL.data[n] = -sigma * dtau * light.intensity * std::exp(-sigma * tau);
        }
    });
    return dL;
}

// ---------------------------------------------------------------------------
// Forward rendering
// ---------------------------------------------------------------------------

Image render(const ScalarGrid& rho, const ScalarGrid& light_volume, const LightConfig& light,
             const Camera& cam, const Image* background, const RenderParams& params,
             Image* transmittance_out) {
    require_same_res(rho.res, light_volume.res, "render");
    if (background && (background->width != cam.width || background->height != cam.height))
        throw ShapeError("render: background resolution does not match the camera");
    const int channels = background ? background->channels : 1;
    Image out(cam.width, cam.height, channels);
    if (transmittance_out) *transmittance_out = Image(cam.width, cam.height, 1, 1.0);

    const Box box = inset_box(rho.res);
    const double sigma = light.absorption;
    const std::int64_t n_pixels = static_cast<std::int64_t>(cam.width) * cam.height;
    parallel_ranges(n_pixels, kPixelGrain, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t pi = b; pi < e; ++pi) {
            const int px = static_cast<int>(pi % cam.width);
            const int py = static_cast<int>(pi / cam.width);
            const Ray ray = pixel_ray(cam, px, py);
            double emitted = 0.0, T = 1.0;
            double t0, t1;
            if (clipped_segment(box, cam, ray, t0, t1)) {
                march(ray, t0, t1, params.step, [&](const Vec3& p, double seg) {
                    const double r = sample_trilinear(rho, p);
                    const double L = sample_trilinear(light_volume, p);
                    emitted += L * sigma * r * seg * T;
                    T *= std::exp(-sigma * r * seg);
                });
            }
            for (int c = 0; c < channels; ++c)
                out.at(px, py, c) = emitted + (background ? T * background->at(px, py, c) : 0.0);
            if (transmittance_out) transmittance_out->at(px, py) = T;
        }
    });
    return out;
}

Image render(const ScalarGrid& rho, const LightConfig& light, const Camera& cam,
             const Image* background, const RenderParams& params, Image* transmittance_out) {
    const ScalarGrid L = build_light_volume(rho, light);
    return render(rho, L, light, cam, background, params, transmittance_out);
}

// ---------------------------------------------------------------------------
// Adjoint and directional derivative
// ---------------------------------------------------------------------------

RenderGrads render_adjoint(const Image& grad_img, const ScalarGrid& rho,
                           const ScalarGrid& light_volume, const LightConfig& light,
                           const Camera& cam, const Image* background,
                           const RenderParams& params) {
    require_same_res(rho.res, light_volume.res, "render_adjoint");
    if (grad_img.width != cam.width || grad_img.height != cam.height)
        throw ShapeError("render_adjoint: gradient image shape mismatch");
    const int channels = grad_img.channels;
    if (background && background->channels != channels)
        throw ShapeError("render_adjoint: background channel mismatch");

    RenderGrads grads{ScalarGrid(rho.res), ScalarGrid(rho.res)};
    const Box box = inset_box(rho.res);
    const double sigma = light.absorption;
    const std::int64_t n_pixels = static_cast<std::int64_t>(cam.width) * cam.height;

    struct Pair {
        ScalarGrid rho, lv;
    };
    parallel_scatter<Pair>(
        n_pixels, kPixelGrain,
        [&]() { return Pair{ScalarGrid(rho.res), ScalarGrid(rho.res)}; },
        [&](Pair& part, std::int64_t b, std::int64_t e) {
            for (std::int64_t pi = b; pi < e; ++pi) {
                const int px = static_cast<int>(pi % cam.width);
                const int py = static_cast<int>(pi / cam.width);
                double gsum = 0.0, gB = 0.0;
                for (int c = 0; c < channels; ++c) {
                    const double g = grad_img.at(px, py, c);
                    gsum += g;
                    if (background) gB += g * background->at(px, py, c);
                }
                if (gsum == 0.0 && gB == 0.0) continue;
                const Ray ray = pixel_ray(cam, px, py);
                double t0, t1;
                if (!clipped_segment(box, cam, ray, t0, t1)) continue;

                // first sweep: total emission and final transmittance
                double E = 0.0, T = 1.0;
                march(ray, t0, t1, params.step, [&](const Vec3& p, double seg) {
                    const double r = sample_trilinear(rho, p);
                    const double L = sample_trilinear(light_volume, p);
                    E += L * sigma * r * seg * T;
                    T *= std::exp(-sigma * r * seg);
                });
                const double T_final = T;

                // second sweep: per-sample gradients using prefix sums
                double Ek = 0.0;
                T = 1.0;
                march(ray, t0, t1, params.step, [&](const Vec3& p, double seg) {
                    const double r = sample_trilinear(rho, p);
                    const double L = sample_trilinear(light_volume, p);
                    const double emit = L * sigma * r * seg * T;
                    Ek += emit;
                    // emission at this sample plus attenuation of everything behind it
                    const double grho =
                        gsum * (sigma * seg * L * T) -
                        sigma * seg * (gsum * (E - Ek) + gB * T_final);
                    const double glv = gsum * sigma * r * seg * T;
                    scatter_trilinear(part.rho, p, grho);
                    scatter_trilinear(part.lv, p, glv);
                    T *= std::exp(-sigma * r * seg);
                });
            }
        },
        [&](Pair&& part) {
            for (std::size_t n = 0; n < rho.data.size(); ++n) {
                grads.rho.data[n] += part.rho.data[n];
                grads.light_volume.data[n] += part.lv.data[n];
            }
        });
    return grads;
}

Image render_jvp(const ScalarGrid& drho, const ScalarGrid& dlight, const ScalarGrid& rho,
                 const ScalarGrid& light_volume, const LightConfig& light, const Camera& cam,
                 const Image* background, const RenderParams& params) {
    require_same_res(rho.res, light_volume.res, "render_jvp");
    require_same_res(drho.res, rho.res, "render_jvp");
    require_same_res(dlight.res, rho.res, "render_jvp");
    const int channels = background ? background->channels : 1;
    Image dout(cam.width, cam.height, channels);
    const Box box = inset_box(rho.res);
    const double sigma = light.absorption;
    const std::int64_t n_pixels = static_cast<std::int64_t>(cam.width) * cam.height;
    parallel_ranges(n_pixels, kPixelGrain, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t pi = b; pi < e; ++pi) {
            const int px = static_cast<int>(pi % cam.width);
            const int py = static_cast<int>(pi / cam.width);
            const Ray ray = pixel_ray(cam, px, py);
            double dE = 0.0, T = 1.0, dT = 0.0;
            double t0, t1;
            if (clipped_segment(box, cam, ray, t0, t1)) {
                march(ray, t0, t1, params.step, [&](const Vec3& p, double seg) {
                    const double r = sample_trilinear(rho, p);
                    const double L = sample_trilinear(light_volume, p);
                    const double dr = sample_trilinear(drho, p);
                    const double dL = sample_trilinear(dlight, p);
                    dE += sigma * seg * (dL * r * T + L * dr * T + L * r * dT);
                    const double a = std::exp(-sigma * r * seg);
                    dT = dT * a + T * (-sigma * seg * dr) * a;
                    T *= a;
                });
            }
            for (int c = 0; c < channels; ++c)
                dout.at(px, py, c) = dE + (background ? dT * background->at(px, py, c) : 0.0);
        }
    });
    return dout;
}

ScalarGrid render_full_adjoint(const Image& grad_img, const ScalarGrid& rho,
                               const LightConfig& light, const Camera& cam,
                               const Image* background, const RenderParams& params) {
    const ScalarGrid L = build_light_volume(rho, light);
    RenderGrads g = render_adjoint(grad_img, rho, L, light, cam, background, params);
    if (params.light_gradients) {
        const ScalarGrid through_light = build_light_volume_adjoint(g.light_volume, rho, light);
        for (std::size_t n = 0; n < g.rho.data.size(); ++n)
            g.rho.data[n] += through_light.data[n];
    }
    return std::move(g.rho);
}

Image render_full_jvp(const ScalarGrid& drho, const ScalarGrid& rho, const LightConfig& light,
                      const Camera& cam, const Image* background, const RenderParams& params) {
    const ScalarGrid L = build_light_volume(rho, light);
    ScalarGrid dL(rho.res);
    if (params.light_gradients) dL = build_light_volume_jvp(drho, rho, light);
    return render_jvp(drho, dL, rho, L, light, cam, background, params);
}

// ---------------------------------------------------------------------------
// Inverse projection
// ---------------------------------------------------------------------------

ScalarGrid unproject(const Image& img, const Camera& cam, const GridDims& res, double step) {
    if (img.width != cam.width || img.height != cam.height)
        throw ShapeError("unproject: image resolution does not match the camera");
    ScalarGrid value(res), weight(res);
    const Box box = inset_box(res);
    const std::int64_t n_pixels = static_cast<std::int64_t>(cam.width) * cam.height;

    struct Pair {
        ScalarGrid value, weight;
    };
    parallel_scatter<Pair>(
        n_pixels, kPixelGrain, [&]() { return Pair{ScalarGrid(res), ScalarGrid(res)}; },
        [&](Pair& part, std::int64_t b, std::int64_t e) {
            for (std::int64_t pi = b; pi < e; ++pi) {
                const int px = static_cast<int>(pi % cam.width);
                const int py = static_cast<int>(pi / cam.width);
                double v = 0.0;
                for (int c = 0; c < img.channels; ++c) v += img.at(px, py, c);
                v /= img.channels;
                const Ray ray = pixel_ray(cam, px, py);
                double t0, t1;
                if (!clipped_segment(box, cam, ray, t0, t1)) continue;
                march(ray, t0, t1, step, [&](const Vec3& p, double) {
                    scatter_trilinear(part.value, p, v);
                    scatter_trilinear(part.weight, p, 1.0);
                });
            }
        },
        [&](Pair&& part) {
            for (std::size_t n = 0; n < value.data.size(); ++n) {
                value.data[n] += part.value.data[n];
                weight.data[n] += part.weight.data[n];
            }
        });

    ScalarGrid out(res);
    for (std::size_t n = 0; n < out.data.size(); ++n)
        out.data[n] = weight.data[n] > 0.0 ? value.data[n] / weight.data[n] : 0.0;
    return out;
}

} // namespace voltrans
