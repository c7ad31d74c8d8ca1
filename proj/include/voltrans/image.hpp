#pragma once

#include <vector>

#include "voltrans/errors.hpp"

namespace voltrans {

/// 2D float raster, row-major with the origin at the top-left pixel.
/// channels is 1 (grayscale) or 3 (rgb).
struct Image {
    int width = 0, height = 0, channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int ch = 1, double fill = 0.0)
        : width(w), height(h), channels(ch),
          data(static_cast<std::size_t>(w) * h * ch, fill) {}

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": image shape mismatch");
}

} // namespace voltrans
