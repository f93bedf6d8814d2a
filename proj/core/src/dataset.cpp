#include "aeromtl/dataset.hpp"

#include <sstream>

#include "aeromtl/checkpoint.hpp"
#include "aeromtl/errors.hpp"
#include "aeromtl/raster_io.hpp"

namespace aeromtl {

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(f);
        if (parts.empty()) continue;
        if (parts.size() != 3) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                       ": expected 'rgb_path height_path labels_path', got " +
                                       std::to_string(parts.size()) + " fields");
        }
        entries.push_back({resolve(parts[0]), resolve(parts[1]), resolve(parts[2])});
    }
    if (entries.empty()) fail(ErrorCode::data, path.string() + ": manifest lists no tiles");
    return entries;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) out += e.rgb.string() + " " + e.height.string() + " " + e.labels.string() + "\n";
    return out;
}

Tile apply_resolution(Raster rgb, Raster height, Raster labels, Resolution strategy, std::size_t factor) {
    if (factor != 1) {
        if (strategy == Resolution::vhr) {
            height = resample(height, factor, 1, ResamplePolicy::bilinear);
            labels = resample(labels, factor, 1, ResamplePolicy::nearest);
        } else {
            rgb = resample(rgb, 1, factor, ResamplePolicy::bilinear);
        }
    }
    auto dims = [](const Raster& r) { return std::to_string(r.width()) + "x" + std::to_string(r.height()); };
    if (rgb.width() != height.width() || rgb.height() != height.height() || rgb.width() != labels.width() ||
        rgb.height() != labels.height()) {
        fail(ErrorCode::data, "after the " + std::string(to_string(strategy)) + " strategy (factor " +
                                  std::to_string(factor) + ") layers disagree: rgb " + dims(rgb) + ", height " +
                                  dims(height) + ", labels " + dims(labels));
    }
    return Tile{std::move(rgb), std::move(height), std::move(labels)};
}

std::vector<Tile> load_tiles(const std::filesystem::path& manifest, Resolution strategy, std::size_t factor) {
    std::vector<Tile> tiles;
    for (const auto& e : read_manifest(manifest)) {
        tiles.push_back(apply_resolution(read_raster(e.rgb, RasterKind::rgb),
                                         read_raster(e.height, RasterKind::height),
                                         read_raster(e.labels, RasterKind::labels), strategy, factor));
    }
    return tiles;
}

}  // namespace aeromtl
