#pragma once

#include <cstddef>

#include "aeromtl/random.hpp"
#include "aeromtl/raster.hpp"

namespace aeromtl {

/// Co-registered image, height and label crops of one window.
struct SamplePair {
    Raster image;
    Raster height;
    Raster labels;
};

/// Square crop of `size` at an origin drawn uniformly over valid positions.
/// All three rasters must share width and height.
SamplePair sample_crop(const Raster& image, const Raster& height, const Raster& labels, std::size_t size, Rng& rng);

struct AugmentDraw {
    bool hflip = false;
    bool vflip = false;
    /// Counter-clockwise quarter turns, 0..3.
    int rotation = 0;

    bool identity() const noexcept { return !hflip && !vflip && rotation == 0; }
};

/// Horizontal and vertical flips with p = 0.5 each, rotation uniform in 0..3.
AugmentDraw draw_augment(Rng& rng);

/// Applies hflip, then vflip, then rotation to a single raster.
Raster apply_augment(const Raster& raster, const AugmentDraw& draw);
SamplePair apply_augment(const SamplePair& pair, const AugmentDraw& draw);

SamplePair augment(const SamplePair& pair, Rng& rng);

/// Window of a raster starting at (x0, y0).
Raster crop(const Raster& raster, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height);

}  // namespace aeromtl
