#include "aeromtl/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "aeromtl/errors.hpp"

namespace aeromtl {

std::string_view to_string(RasterKind kind) {
    switch (kind) {
    case RasterKind::rgb: return "rgb";
    case RasterKind::height: return "height";
    case RasterKind::dsm: return "dsm";
    case RasterKind::dem: return "dem";
    case RasterKind::labels: return "labels";
    }
    return "unknown";
}

RasterKind parse_raster_kind(std::string_view name) {
    for (auto kind : {RasterKind::rgb, RasterKind::height, RasterKind::dsm, RasterKind::dem, RasterKind::labels}) {
        if (to_string(kind) == name) return kind;
    }
    fail(ErrorCode::invalid_argument, "unknown raster kind '" + std::string(name) + "'");
}

Raster::Raster(RasterKind kind, std::size_t width, std::size_t height, std::size_t channels, float fill)
    : kind_(kind), width_(width), height_(height), channels_(channels) {
    if (width == 0 || height == 0 || channels == 0) {
        fail(ErrorCode::invalid_argument, "raster extents must be positive, got " + std::to_string(width) + "x" +
                                              std::to_string(height) + "x" + std::to_string(channels));
    }
    values_.assign(width * height * channels, fill);
    mask_.assign(width * height, 1);
}

std::size_t Raster::valid_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

void Raster::invalidate(std::size_t y, std::size_t x) {
    set_valid(y, x, false);
    if (kind_ == RasterKind::height || kind_ == RasterKind::dsm || kind_ == RasterKind::dem) {
        for (std::size_t c = 0; c < channels_; ++c) at(c, y, x) = std::numeric_limits<float>::quiet_NaN();
    } else if (kind_ == RasterKind::labels) {
        at(0, y, x) = 255.0f;
    }
}

bool bitwise_equal(const Raster& a, const Raster& b) {
    if (a.kind() != b.kind() || !a.same_dims(b)) return false;
    if (!std::equal(a.mask().begin(), a.mask().end(), b.mask().begin())) return false;
    const auto va = a.values(), vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (std::bit_cast<std::uint32_t>(va[i]) != std::bit_cast<std::uint32_t>(vb[i])) return false;
    }
    return true;
}

Raster height_from_dsm_dem(const Raster& dsm, const Raster& dem, bool clamp_negative) {
    if (dsm.width() != dem.width() || dsm.height() != dem.height() || dsm.channels() != 1 || dem.channels() != 1) {
        fail(ErrorCode::shape, "height_from_dsm_dem: dsm is " + std::to_string(dsm.width()) + "x" +
                                   std::to_string(dsm.height()) + "x" + std::to_string(dsm.channels()) +
                                   " but dem is " + std::to_string(dem.width()) + "x" + std::to_string(dem.height()) +
                                   "x" + std::to_string(dem.channels()));
    }
    if (dsm.kind() == RasterKind::labels || dsm.kind() == RasterKind::rgb || dem.kind() == RasterKind::labels ||
        dem.kind() == RasterKind::rgb) {
        fail(ErrorCode::invalid_argument, "height_from_dsm_dem: inputs must be elevation rasters");
    }
    Raster out(RasterKind::height, dsm.width(), dsm.height(), 1);
    for (std::size_t y = 0; y < dsm.height(); ++y) {
        for (std::size_t x = 0; x < dsm.width(); ++x) {
            if (!dsm.valid(y, x) || !dem.valid(y, x)) {
                out.invalidate(y, x);
                continue;
            }
            float h = dsm.at(y, x) - dem.at(y, x);
            if (clamp_negative && h < 0.0f) h = 0.0f;
            out.at(y, x) = h;
        }
    }
    return out;
}

namespace {

struct Tap {
    std::size_t i0, i1;
    double w0, w1;
};

// Pixel-centre aligned source coordinate for destination index d.
Tap bilinear_tap(std::size_t d, std::size_t src_extent, double inv_scale) {
    double s = (static_cast<double>(d) + 0.5) * inv_scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_extent - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t i1 = std::min(i0 + 1, src_extent - 1);
    const double t = s - static_cast<double>(i0);
    return Tap{i0, i1, 1.0 - t, t};
}

std::size_t nearest_index(std::size_t d, std::size_t src_extent, double inv_scale) {
    const double s = std::floor((static_cast<double>(d) + 0.5) * inv_scale);
    return std::min(static_cast<std::size_t>(std::max(s, 0.0)), src_extent - 1);
}

}  // namespace

Raster resample(const Raster& raster, std::size_t num, std::size_t den, ResamplePolicy policy) {
    if (num == 0 || den == 0) {
        fail(ErrorCode::invalid_argument, "resample: factor must be positive, got " + std::to_string(num) + "/" +
                                              std::to_string(den));
    }
    if (policy == ResamplePolicy::automatic) {
        policy = raster.kind() == RasterKind::labels ? ResamplePolicy::nearest : ResamplePolicy::bilinear;
    }
    if (policy == ResamplePolicy::bilinear && raster.kind() == RasterKind::labels) {
        fail(ErrorCode::invalid_argument, "resample: label rasters must use nearest-neighbour resampling");
    }
    const double factor = static_cast<double>(num) / static_cast<double>(den);
    const double inv_scale = static_cast<double>(den) / static_cast<double>(num);
    const auto out_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(raster.width() * factor)));
    const auto out_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(raster.height() * factor)));
    if (num == den) return raster;

    Raster out(raster.kind(), out_w, out_h, raster.channels());
    if (policy == ResamplePolicy::nearest) {
        for (std::size_t y = 0; y < out_h; ++y) {
            const std::size_t sy = nearest_index(y, raster.height(), inv_scale);
            for (std::size_t x = 0; x < out_w; ++x) {
                const std::size_t sx = nearest_index(x, raster.width(), inv_scale);
                for (std::size_t c = 0; c < raster.channels(); ++c) out.at(c, y, x) = raster.at(c, sy, sx);
                out.set_valid(y, x, raster.valid(sy, sx));
            }
        }
        return out;
    }

    for (std::size_t y = 0; y < out_h; ++y) {
        const Tap ty = bilinear_tap(y, raster.height(), inv_scale);
        for (std::size_t x = 0; x < out_w; ++x) {
            const Tap tx = bilinear_tap(x, raster.width(), inv_scale);
            const std::size_t ys[2] = {ty.i0, ty.i1};
            const std::size_t xs[2] = {tx.i0, tx.i1};
            const double wy[2] = {ty.w0, ty.w1};
            const double wx[2] = {tx.w0, tx.w1};
            bool valid = true;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    if (wy[a] * wx[b] > 0.0 && !raster.valid(ys[a], xs[b])) valid = false;
                }
            }
            if (!valid) {
                out.invalidate(y, x);
                continue;
            }
            for (std::size_t c = 0; c < raster.channels(); ++c) {
                double acc = 0.0;
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const double w = wy[a] * wx[b];
                        if (w > 0.0) acc += w * raster.at(c, ys[a], xs[b]);
                    }
                }
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

}  // namespace aeromtl
