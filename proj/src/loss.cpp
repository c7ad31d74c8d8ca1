#include "voltrans/loss.hpp"

#include <cmath>

#include "voltrans/threading.hpp"

namespace voltrans {

namespace {

double mse_flat(const std::vector<double>& a, const std::vector<double>& b) {
    const std::int64_t n = static_cast<std::int64_t>(a.size());
    const double sum = parallel_sum(n, 8192, [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
            s += d * d;
        }
        return s;
    });
    return sum / static_cast<double>(n);
}

} // namespace

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    return mse_flat(a.data, b.data);
}

Image mse_gradient(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse_gradient");
    Image g(a.width, a.height, a.channels);
    const double scale = 2.0 / static_cast<double>(a.data.size());
    for (std::size_t n = 0; n < a.data.size(); ++n)
        g.data[n] = scale * (a.data[n] - b.data[n]);
    return g;
}

double mse(const ScalarGrid& a, const ScalarGrid& b) {
    require_same_res(a.res, b.res, "mse");
    return mse_flat(a.data, b.data);
}

ScalarGrid mse_gradient(const ScalarGrid& a, const ScalarGrid& b) {
    require_same_res(a.res, b.res, "mse_gradient");
    ScalarGrid g(a.res);
    const double scale = 2.0 / static_cast<double>(a.data.size());
    for (std::size_t n = 0; n < a.data.size(); ++n)
        g.data[n] = scale * (a.data[n] - b.data[n]);
    return g;
}

double target_loss(const ScalarGrid& rho, const Image& target, const LightConfig& light,
                   const Camera& cam, const Image* background, const RenderParams& params) {
    return mse(render(rho, light, cam, background, params), target);
}

namespace {

inline double center_weight(int idx, double c_z, int r) {
    const double d = (c_z - (idx + 0.5)) * 2.0 / static_cast<double>(r);
    return d * d;
}

} // namespace

double center_loss(const ScalarGrid& rho, int depth_axis, double c_z) {
    const int r = depth_axis == 0 ? rho.res.nx : depth_axis == 1 ? rho.res.ny : rho.res.nz;
    double total = 0.0;
    for (int k = 0; k < rho.res.nz; ++k)
        for (int j = 0; j < rho.res.ny; ++j)
            for (int i = 0; i < rho.res.nx; ++i) {
                const int idx = depth_axis == 0 ? i : depth_axis == 1 ? j : k;
                const double v = rho.at(i, j, k);
                total += v * v * center_weight(idx, c_z, r);
            }
    return total;
}

ScalarGrid center_loss_gradient(const ScalarGrid& rho, int depth_axis, double c_z) {
    const int r = depth_axis == 0 ? rho.res.nx : depth_axis == 1 ? rho.res.ny : rho.res.nz;
    ScalarGrid g(rho.res);
    for (int k = 0; k < rho.res.nz; ++k)
        for (int j = 0; j < rho.res.ny; ++j)
            for (int i = 0; i < rho.res.nx; ++i) {
                const int idx = depth_axis == 0 ? i : depth_axis == 1 ? j : k;
                g.at(i, j, k) = 2.0 * rho.at(i, j, k) * center_weight(idx, c_z, r);
            }
    return g;
}

double cfl_loss(const VectorGrid& u) {
    const std::int64_t n = static_cast<std::int64_t>(u.data.size());
    const double sum = parallel_sum(n, 8192, [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const double v = u.data[static_cast<std::size_t>(i)];
            const double ex = v * v - 1.0;
            if (ex > 0.0) s += ex;
        }
        return s;
    });
    return sum / static_cast<double>(u.res.cells());
}

VectorGrid cfl_loss_gradient(const VectorGrid& u) {
    VectorGrid g(u.res);
    const double scale = 1.0 / static_cast<double>(u.res.cells());
    for (std::size_t n = 0; n < u.data.size(); ++n) {
        const double v = u.data[n];
        g.data[n] = (v * v > 1.0) ? scale * 2.0 * v : 0.0;
    }
    return g;
}

double smoothness_loss(const VectorGrid& u) {
    const GridDims& r = u.res;
    double total = 0.0;
    for (int k = 0; k < r.nz; ++k)
        for (int j = 0; j < r.ny; ++j)
            for (int i = 0; i < r.nx; ++i)
                for (int c = 0; c < 3; ++c) {
                    const double v = u.at(i, j, k, c);
                    if (i + 1 < r.nx) {
                        const double d = u.at(i + 1, j, k, c) - v;
                        total += d * d;
                    }
                    if (j + 1 < r.ny) {
                        const double d = u.at(i, j + 1, k, c) - v;
                        total += d * d;
                    }
                    if (k + 1 < r.nz) {
                        const double d = u.at(i, j, k + 1, c) - v;
                        total += d * d;
                    }
                }
    return total / static_cast<double>(r.cells());
}

VectorGrid smoothness_loss_gradient(const VectorGrid& u) {
    const GridDims& r = u.res;
    VectorGrid g(u.res);
    const double scale = 2.0 / static_cast<double>(r.cells());
    for (int k = 0; k < r.nz; ++k)
        for (int j = 0; j < r.ny; ++j)
            for (int i = 0; i < r.nx; ++i)
                for (int c = 0; c < 3; ++c) {
                    const double v = u.at(i, j, k, c);
                    if (i + 1 < r.nx) {
                        const double d = u.at(i + 1, j, k, c) - v;
                        g.at(i + 1, j, k, c) += scale * d;
                        g.at(i, j, k, c) -= scale * d;
                    }
                    if (j + 1 < r.ny) {
                        const double d = u.at(i, j + 1, k, c) - v;
                        g.at(i, j + 1, k, c) += scale * d;
                        g.at(i, j, k, c) -= scale * d;
                    }
                    if (k + 1 < r.nz) {
                        const double d = u.at(i, j, k + 1, c) - v;
                        g.at(i, j, k + 1, c) += scale * d;
                        g.at(i, j, k, c) -= scale * d;
                    }
                }
    return g;
}

double ralsgan(std::span<const double> scores_real, std::span<const double> scores_fake,
               double label) {
    if (scores_real.empty() || scores_fake.empty())
        throw Error("ralsgan: score lists must be non-empty");
    double mean_real = 0.0, mean_fake = 0.0;
    for (double s : scores_real) mean_real += s;
    for (double s : scores_fake) mean_fake += s;
    mean_real /= static_cast<double>(scores_real.size());
    mean_fake /= static_cast<double>(scores_fake.size());

    double term_real = 0.0;
    for (double s : scores_real) {
        const double d = s - mean_fake - label;
        term_real += d * d;
    }
    double term_fake = 0.0;
    for (double s : scores_fake) {
        const double d = s - mean_real + label;
        term_fake += d * d;
    }
    return term_real / static_cast<double>(scores_real.size()) +
           term_fake / static_cast<double>(scores_fake.size());
}

} // namespace voltrans
