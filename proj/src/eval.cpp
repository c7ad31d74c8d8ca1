#include "voltrans/eval.hpp"

#include <cmath>

namespace voltrans {

double rmse_image(const Image& a, const Image& b) {
    require_same_shape(a, b, "rmse_image");
    double s = 0.0;
    for (std::size_t n = 0; n < a.data.size(); ++n) {
        const double d = a.data[n] - b.data[n];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.data.size()));
}

double rmse_volume(const ScalarGrid& a, const ScalarGrid& b) {
    require_same_res(a.res, b.res, "rmse_volume");
    double s = 0.0;
    for (std::size_t n = 0; n < a.data.size(); ++n) {
        const double d = a.data[n] - b.data[n];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.data.size()));
}

double endpoint_error(const VectorGrid& u, const VectorGrid& u_ref, const ScalarGrid* mask,
                      double mask_threshold) {
    require_same_res(u.res, u_ref.res, "endpoint_error");
    if (mask) require_same_res(u.res, mask->res, "endpoint_error mask");
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < u.res.cells(); ++n) {
        if (mask && mask->data[n] <= mask_threshold) continue;
        const double dx = u.data[3 * n] - u_ref.data[3 * n];
        const double dy = u.data[3 * n + 1] - u_ref.data[3 * n + 1];
        const double dz = u.data[3 * n + 2] - u_ref.data[3 * n + 2];
        s += std::sqrt(dx * dx + dy * dy + dz * dz);
        ++count;
    }
    return count ? s / static_cast<double>(count) : 0.0;
}

double rmse_velocity(const VectorGrid& u, const VectorGrid& u_ref) {
    require_same_res(u.res, u_ref.res, "rmse_velocity");
    double s = 0.0;
    for (std::size_t n = 0; n < u.data.size(); ++n) {
        const double d = u.data[n] - u_ref.data[n];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(u.data.size()));
}

double density_centroid(const ScalarGrid& rho, int axis) {
    double mass = 0.0, moment = 0.0;
    for (int k = 0; k < rho.res.nz; ++k)
        for (int j = 0; j < rho.res.ny; ++j)
            for (int i = 0; i < rho.res.nx; ++i) {
                const double v = rho.at(i, j, k);
                const double c = (axis == 0 ? i : axis == 1 ? j : k) + 0.5;
                mass += v;
                moment += v * c;
            }
    if (mass <= 0.0) {
        const int n = axis == 0 ? rho.res.nx : axis == 1 ? rho.res.ny : rho.res.nz;
        return 0.5 * n;
    }
    return moment / mass;
}

double max_second_difference(const VectorGrid& u) {
    const GridDims& r = u.res;
    double m = 0.0;
    for (int k = 0; k < r.nz; ++k)
        for (int j = 0; j < r.ny; ++j)
            for (int i = 0; i < r.nx; ++i)
                for (int c = 0; c < 3; ++c) {
                    if (i > 0 && i + 1 < r.nx)
                        m = std::max(m, std::abs(u.at(i - 1, j, k, c) - 2.0 * u.at(i, j, k, c) +
                                                 u.at(i + 1, j, k, c)));
                    if (j > 0 && j + 1 < r.ny)
                        m = std::max(m, std::abs(u.at(i, j - 1, k, c) - 2.0 * u.at(i, j, k, c) +
                                                 u.at(i, j + 1, k, c)));
                    if (k > 0 && k + 1 < r.nz)
                        m = std::max(m, std::abs(u.at(i, j, k - 1, c) - 2.0 * u.at(i, j, k, c) +
                                                 u.at(i, j, k + 1, c)));
                }
    return m;
}

} // namespace voltrans
