#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeromtl/raster.hpp"
#include "aeromtl/run_config.hpp"

namespace aeromtl {

struct ManifestEntry {
    std::filesystem::path rgb;
    std::filesystem::path height;
    std::filesystem::path labels;
};

/// One "rgb_path height_path labels_path" triple per line; blank lines and
/// '#' comments are skipped, relative paths resolve against the manifest.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<ManifestEntry>& entries);

/// Co-registered training tile at a common resolution.
struct Tile {
    Raster rgb;
    Raster height;
    Raster labels;
};

/// vhr upsamples the maps by `factor`; lr downsamples the image by `factor`.
/// Afterwards all three layers must share width and height (data error).
Tile apply_resolution(Raster rgb, Raster height, Raster labels, Resolution strategy, std::size_t factor);

std::vector<Tile> load_tiles(const std::filesystem::path& manifest, Resolution strategy, std::size_t factor);

}  // namespace aeromtl
