#include "aeromtl/sampling.hpp"

#include <string>

#include "aeromtl/errors.hpp"

namespace aeromtl {

Raster crop(const Raster& raster, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height) {
    if (x0 + width > raster.width() || y0 + height > raster.height()) {
        fail(ErrorCode::invalid_argument, "crop " + std::to_string(width) + "x" + std::to_string(height) + " at (" +
                                              std::to_string(x0) + ", " + std::to_string(y0) +
                                              ") exceeds raster " + std::to_string(raster.width()) + "x" +
                                              std::to_string(raster.height()));
    }
    Raster out(raster.kind(), width, height, raster.channels());
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < raster.channels(); ++c) out.at(c, y, x) = raster.at(c, y0 + y, x0 + x);
            out.set_valid(y, x, raster.valid(y0 + y, x0 + x));
        }
    }
    return out;
}

SamplePair sample_crop(const Raster& image, const Raster& height, const Raster& labels, std::size_t size, Rng& rng) {
    const std::size_t w = image.width(), h = image.height();
    if (height.width() != w || height.height() != h || labels.width() != w || labels.height() != h) {
        fail(ErrorCode::shape, "sample_crop: image " + std::to_string(w) + "x" + std::to_string(h) + ", height " +
                                   std::to_string(height.width()) + "x" + std::to_string(height.height()) +
                                   ", labels " + std::to_string(labels.width()) + "x" +
                                   std::to_string(labels.height()) + " are not co-registered");
    }
    if (size == 0 || size > w || size > h) {
        fail(ErrorCode::invalid_argument, "sample_crop: crop size " + std::to_string(size) + " does not fit tile " +
                                              std::to_string(w) + "x" + std::to_string(h));
    }
    const auto x0 = static_cast<std::size_t>(uniform_index(rng, w - size + 1));
    const auto y0 = static_cast<std::size_t>(uniform_index(rng, h - size + 1));
    return SamplePair{crop(image, x0, y0, size, size), crop(height, x0, y0, size, size),
                      crop(labels, x0, y0, size, size)};
}

AugmentDraw draw_augment(Rng& rng) {
    AugmentDraw d;
    d.hflip = uniform_index(rng, 2) == 1;
    d.vflip = uniform_index(rng, 2) == 1;
    d.rotation = static_cast<int>(uniform_index(rng, 4));
    return d;
}

Raster apply_augment(const Raster& raster, const AugmentDraw& draw) {
    if (draw.identity()) return raster;
    const int rot = ((draw.rotation % 4) + 4) % 4;
    const std::size_t w = raster.width(), h = raster.height();
    const bool swap = rot % 2 == 1;
    const std::size_t ow = swap ? h : w, oh = swap ? w : h;
    Raster out(raster.kind(), ow, oh, raster.channels());
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            // Undo the rotation to find the flipped-frame coordinate (fx, fy).
            std::size_t fx = x, fy = y;
            switch (rot) {
            case 1: fx = w - 1 - y; fy = x; break;
            case 2: fx = w - 1 - x; fy = h - 1 - y; break;
            case 3: fx = y; fy = h - 1 - x; break;
            default: break;
            }
            const std::size_t sx = draw.hflip ? w - 1 - fx : fx;
            const std::size_t sy = draw.vflip ? h - 1 - fy : fy;
            for (std::size_t c = 0; c < raster.channels(); ++c) out.at(c, y, x) = raster.at(c, sy, sx);
            out.set_valid(y, x, raster.valid(sy, sx));
        }
    }
    return out;
}

SamplePair apply_augment(const SamplePair& pair, const AugmentDraw& draw) {
    return SamplePair{apply_augment(pair.image, draw), apply_augment(pair.height, draw),
                      apply_augment(pair.labels, draw)};
}

SamplePair augment(const SamplePair& pair, Rng& rng) { return apply_augment(pair, draw_augment(rng)); }

}  // namespace aeromtl
