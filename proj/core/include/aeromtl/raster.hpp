#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace aeromtl {

enum class RasterKind { rgb, height, dsm, dem, labels };

std::string_view to_string(RasterKind kind);
RasterKind parse_raster_kind(std::string_view name);

/// H x W x C image stored as planar float values with a per-pixel validity
/// mask. RGB rasters hold 8-bit intensities (0..255); label rasters hold
/// integer class ids with 255 as the ignore label.
class Raster {
public:
    Raster() = default;
    Raster(RasterKind kind, std::size_t width, std::size_t height, std::size_t channels, float fill = 0.0f);

    RasterKind kind() const noexcept { return kind_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t pixels() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return values_.empty(); }

    float& at(std::size_t c, std::size_t y, std::size_t x) { return values_[(c * height_ + y) * width_ + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const { return values_[(c * height_ + y) * width_ + x]; }
    float& at(std::size_t y, std::size_t x) { return at(0, y, x); }
    float at(std::size_t y, std::size_t x) const { return at(0, y, x); }

    std::span<float> plane(std::size_t c) { return std::span<float>(values_).subspan(c * pixels(), pixels()); }
    std::span<const float> plane(std::size_t c) const {
        return std::span<const float>(values_).subspan(c * pixels(), pixels());
    }
    std::span<float> values() noexcept { return values_; }
    std::span<const float> values() const noexcept { return values_; }

    bool valid(std::size_t y, std::size_t x) const { return mask_[y * width_ + x] != 0; }
    void set_valid(std::size_t y, std::size_t x, bool valid) { mask_[y * width_ + x] = valid ? 1 : 0; }
    std::span<std::uint8_t> mask() noexcept { return mask_; }
    std::span<const std::uint8_t> mask() const noexcept { return mask_; }
    std::size_t valid_count() const;

    /// Marks the pixel invalid. Elevation rasters also get NaN in every
    /// channel (the PFM encoding of invalid), label rasters get 255.
    void invalidate(std::size_t y, std::size_t x);

    /// Integer label at (y, x).
    std::int32_t label(std::size_t y, std::size_t x) const { return static_cast<std::int32_t>(at(0, y, x)); }

    bool same_dims(const Raster& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    RasterKind kind_ = RasterKind::height;
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 0;
    std::vector<float> values_;
    std::vector<std::uint8_t> mask_;
};

/// Bitwise equality of values and mask (NaN payloads compare by bits).
bool bitwise_equal(const Raster& a, const Raster& b);

/// Per-pixel dsm - dem; negatives clamp to zero unless disabled. A pixel is
/// invalid when either input is invalid there.
Raster height_from_dsm_dem(const Raster& dsm, const Raster& dem, bool clamp_negative = true);

enum class ResamplePolicy { automatic, bilinear, nearest };

/// Resizes by num/den; output extents are round(input * num / den). The
/// automatic policy uses nearest for labels and bilinear otherwise. Label
/// rasters never accept bilinear.
Raster resample(const Raster& raster, std::size_t num, std::size_t den = 1,
                ResamplePolicy policy = ResamplePolicy::automatic);

}  // namespace aeromtl
