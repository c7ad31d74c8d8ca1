#include "voltrans/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "voltrans/json_io.hpp"

namespace voltrans {

namespace {

static_assert(std::endian::native == std::endian::little,
              "file writers assume a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path, const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError(path + ": truncated " + what);
    return v;
}

void write_vgrid_impl(const std::filesystem::path& path, const GridDims& res, int channels,
                      const std::vector<double>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write("VGRD", 4);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(res.nx));
    write_u32(out, static_cast<std::uint32_t>(res.ny));
    write_u32(out, static_cast<std::uint32_t>(res.nz));
    write_u32(out, static_cast<std::uint32_t>(channels));
    std::vector<float> buf(data.size());
    for (std::size_t n = 0; n < data.size(); ++n) buf[n] = static_cast<float>(data[n]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw Error("write failed: " + path.string());
}

} // namespace

void write_vgrid(const std::filesystem::path& path, const ScalarGrid& g) {
    write_vgrid_impl(path, g.res, 1, g.data);
}

void write_vgrid(const std::filesystem::path& path, const VectorGrid& g) {
    write_vgrid_impl(path, g.res, 3, g.data);
}

GridFile read_vgrid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VGRD", 4) != 0)
        throw FormatError(path.string() + ": bad magic, not a vgrid file");
    const std::uint32_t version = read_u32(in, path.string(), "version");
    if (version != 1)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    const std::uint32_t nx = read_u32(in, path.string(), "nx");
    const std::uint32_t ny = read_u32(in, path.string(), "ny");
    const std::uint32_t nz = read_u32(in, path.string(), "nz");
    const std::uint32_t channels = read_u32(in, path.string(), "channels");
    if (nx == 0 || ny == 0 || nz == 0)
        throw FormatError(path.string() + ": zero dimension");
    if (channels != 1 && channels != 3)
        throw FormatError(path.string() + ": unsupported channel count " + std::to_string(channels));
    const std::uint64_t count = std::uint64_t(nx) * ny * nz * channels;
    if (count > (std::uint64_t(1) << 33))
        throw FormatError(path.string() + ": dimensions overflow sane limits");
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw FormatError(path.string() + ": truncated payload");

    const GridDims res{static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)};
    if (channels == 1) {
        ScalarGrid g(res);
        for (std::size_t n = 0; n < count; ++n) g.data[n] = buf[n];
        return g;
    }
    VectorGrid g(res);
    for (std::size_t n = 0; n < count; ++n) g.data[n] = buf[n];
    return g;
}

ScalarGrid read_vgrid_scalar(const std::filesystem::path& path) {
    GridFile f = read_vgrid(path);
    if (auto* g = std::get_if<ScalarGrid>(&f)) return std::move(*g);
    throw FormatError(path.string() + ": expected 1 channel, found 3");
}

VectorGrid read_vgrid_vector(const std::filesystem::path& path) {
    GridFile f = read_vgrid(path);
    if (auto* g = std::get_if<VectorGrid>(&f)) return std::move(*g);
    throw FormatError(path.string() + ": expected 3 channels, found 1");
}

// ---------------------------------------------------------------------------
// PFM. Binary float32, rows stored bottom-to-top, negative scale marks little
// endian. "Pf" is grayscale, "PF" rgb.
// ---------------------------------------------------------------------------

void write_pfm(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw Error("pfm supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << (img.channels == 1 ? "Pf" : "PF") << "\n"
        << img.width << " " << img.height << "\n"
        << "-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] =
                    static_cast<float>(img.at(x, y, c));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw Error("write failed: " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    std::string type;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> type >> w >> h >> scale;
    if (!in || (type != "Pf" && type != "PF"))
        throw FormatError(path.string() + ": not a pfm file");
    if (w <= 0 || h <= 0) throw FormatError(path.string() + ": bad dimensions");
    if (scale >= 0.0) throw FormatError(path.string() + ": big-endian pfm not supported");
    in.get(); // single whitespace after the header
    const int channels = (type == "Pf") ? 1 : 3;
    Image img(w, h, channels);
    std::vector<float> row(static_cast<std::size_t>(w) * channels);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) throw FormatError(path.string() + ": truncated payload");
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c];
    }
    return img;
}

// ---------------------------------------------------------------------------
// Minimal PNG writer (8-bit gray or rgb) on top of zlib.
// ---------------------------------------------------------------------------

namespace {

void png_chunk(std::ostream& out, const char type[4], const std::vector<unsigned char>& payload) {
    auto be32 = [](std::uint32_t v) {
        return std::array<unsigned char, 4>{static_cast<unsigned char>(v >> 24),
                                            static_cast<unsigned char>(v >> 16),
                                            static_cast<unsigned char>(v >> 8),
                                            static_cast<unsigned char>(v)};
    };
    auto len = be32(static_cast<std::uint32_t>(payload.size()));
    out.write(reinterpret_cast<const char*>(len.data()), 4);
    out.write(type, 4);
    if (!payload.empty())
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty())
        crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    auto c = be32(crc);
    out.write(reinterpret_cast<const char*>(c.data()), 4);
}

} // namespace

void write_png8(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw Error("png supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<unsigned char> ihdr(13);
    auto put32 = [&](std::size_t off, std::uint32_t v) {
        ihdr[off] = static_cast<unsigned char>(v >> 24);
        ihdr[off + 1] = static_cast<unsigned char>(v >> 16);
        ihdr[off + 2] = static_cast<unsigned char>(v >> 8);
        ihdr[off + 3] = static_cast<unsigned char>(v);
    };
    put32(0, static_cast<std::uint32_t>(img.width));
    put32(4, static_cast<std::uint32_t>(img.height));
    ihdr[8] = 8;                                    // bit depth
    ihdr[9] = (img.channels == 1) ? 0 : 2;          // gray / truecolor
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    png_chunk(out, "IHDR", ihdr);

    // raw scanlines, each prefixed with filter byte 0
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<unsigned char> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        unsigned char* line = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        line[0] = 0;
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
                line[1 + static_cast<std::size_t>(x) * img.channels + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> zbuf(zlen);
    if (compress2(zbuf.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw Error("png compression failed");
    zbuf.resize(zlen);
    png_chunk(out, "IDAT", zbuf);
    png_chunk(out, "IEND", {});
    if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// JSON helpers.
// ---------------------------------------------------------------------------

nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": invalid json: " + e.what());
    }
}

void save_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& file, const std::string& field) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(file, field, "expected an array of 3 numbers");
    return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Camera camera_from_json(const nlohmann::json& c, const std::string& source) {
    Camera cam;
    auto need = [&](const char* field) -> const nlohmann::json& {
        if (!c.contains(field)) throw ConfigError(source, field, "missing");
        return c.at(field);
    };
    cam.position = vec3_from_json(need("position"), source, "position");
    cam.forward = vec3_from_json(need("forward"), source, "forward");
    cam.up = vec3_from_json(need("up"), source, "up");
    cam.fov_y_deg = need("fov_y").get<double>();
    const auto& ir = need("image_res");
    if (!ir.is_array() || ir.size() != 2)
        throw ConfigError(source, "image_res", "expected [width, height]");
    cam.width = ir[0].get<int>();
    cam.height = ir[1].get<int>();
    cam.near = need("near").get<double>();
    cam.far = need("far").get<double>();
    validate_camera(cam, source);
    return cam;
}

nlohmann::json camera_to_json(const Camera& cam) {
    nlohmann::json j;
    j["position"] = vec3_to_json(cam.position);
    j["forward"] = vec3_to_json(cam.forward);
    j["up"] = vec3_to_json(cam.up);
    j["fov_y"] = cam.fov_y_deg;
    j["image_res"] = {cam.width, cam.height};
    j["near"] = cam.near;
    j["far"] = cam.far;
    return j;
}

LightConfig light_from_json(const nlohmann::json& j, const std::string& source) {
    LightConfig light;
    if (j.contains("direction")) light.direction = vec3_from_json(j.at("direction"), source, "direction");
    light.intensity = j.value("intensity", light.intensity);
    light.ambient = j.value("ambient", light.ambient);
    light.absorption = j.value("absorption", light.absorption);
    validate_light(light, source);
    return light;
}

nlohmann::json light_to_json(const LightConfig& light) {
    nlohmann::json j;
    j["direction"] = vec3_to_json(light.direction);
    j["intensity"] = light.intensity;
    j["ambient"] = light.ambient;
    j["absorption"] = light.absorption;
    return j;
}

Camera camera_from_json_file(const std::filesystem::path& path) {
    const nlohmann::json j = load_json_file(path);
    const nlohmann::json& c = j.contains("camera") ? j.at("camera") : j;
    return camera_from_json(c, path.string());
}

} // namespace voltrans
