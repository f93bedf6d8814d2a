#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeromtl/raster.hpp"

namespace aeromtl {

using Color = std::array<std::uint8_t, 3>;
using Palette = std::vector<Color>;

/// Colors for the six synthetic classes.
Palette default_palette();

/// Value range mapped onto the colormap; unset means the map's min and max.
struct RenderRange {
    float low = 0.0f;
    float high = 1.0f;
};

struct Rendering {
    Raster image;        // rgb
    std::string legend;  // text sidecar
};

/// Labels to palette colors; invalid pixels are black.
Rendering render_labels(const Raster& labels, const Palette& palette, std::size_t num_classes);

/// Continuous map through a dark-blue to yellow ramp; invalid pixels black.
Rendering render_scalar(const Raster& map, std::optional<RenderRange> range = std::nullopt,
                        const std::string& title = "height");

/// Ramp color at t in [0, 1].
Color ramp_color(double t);

}  // namespace aeromtl
