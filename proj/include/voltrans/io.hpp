#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "voltrans/camera.hpp"
#include "voltrans/grid.hpp"
#include "voltrans/image.hpp"

namespace voltrans {

// ---------------------------------------------------------------------------
// .vgrid — dense volume exchange format.
//
//   magic   "VGRD"                        4 bytes
//   version u32 = 1
//   nx, ny, nz, channels                  u32 each (channels 1 or 3)
//   data    channels*nx*ny*nz float32, little endian,
//           flat index = ((z*ny + y)*nx + x)*channels + c
//
// Round trips are bit exact: the float32 payload is stored verbatim.
// ---------------------------------------------------------------------------

void write_vgrid(const std::filesystem::path& path, const ScalarGrid& g);
void write_vgrid(const std::filesystem::path& path, const VectorGrid& g);

using GridFile = std::variant<ScalarGrid, VectorGrid>;
GridFile read_vgrid(const std::filesystem::path& path);
ScalarGrid read_vgrid_scalar(const std::filesystem::path& path);
VectorGrid read_vgrid_vector(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Images. PFM carries float data for targets/renders used in losses; PNG is
// 8-bit, for visualization only.
// ---------------------------------------------------------------------------

void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);

/// Writes values clamped to [0,1] and quantized to 8 bits.
void write_png8(const std::filesystem::path& path, const Image& img);

// ---------------------------------------------------------------------------
// JSON camera / light descriptions (shared by scene configs and manifests).
// ---------------------------------------------------------------------------

Camera camera_from_json_file(const std::filesystem::path& path);

} // namespace voltrans
