#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aeromtl/raster.hpp"

namespace aeromtl {

// File formats by raster kind:
//   height, dsm, dem -> PFM ("Pf" one channel, "PF" three), rows stored
//                       bottom-to-top, negative scale = little-endian. NaN
//                       marks an invalid pixel.
//   rgb              -> binary PPM (P6), maxval 255.
//   labels           -> binary PGM (P5), maxval 255, 255 = ignore/invalid.
// Malformed headers and truncated payloads raise ErrorCode::parse with the
// byte offset of the problem.

Raster decode_pfm(std::span<const std::uint8_t> bytes, RasterKind kind = RasterKind::height);
std::vector<std::uint8_t> encode_pfm(const Raster& raster);

Raster decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Raster& raster);

Raster decode_pgm(std::span<const std::uint8_t> bytes, RasterKind kind = RasterKind::labels);
std::vector<std::uint8_t> encode_pgm(const Raster& raster);

Raster read_raster(const std::filesystem::path& path, RasterKind kind);
void write_raster(const Raster& raster, const std::filesystem::path& path);

}  // namespace aeromtl
