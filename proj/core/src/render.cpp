#include "aeromtl/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

constexpr std::array<Color, 5> kRamp = {Color{68, 1, 84}, Color{59, 82, 139}, Color{33, 145, 140},
                                        Color{94, 201, 98}, Color{253, 231, 37}};

const char* const kSynthNames[] = {"ground", "building", "tree", "road", "grass", "car"};

}  // namespace

Palette default_palette() {
    return {Color{160, 140, 110}, Color{220, 60, 60}, Color{30, 120, 30},
            Color{110, 110, 115}, Color{140, 210, 90}, Color{250, 200, 0}};
}

Color ramp_color(double t) {
    if (!(t > 0.0)) return kRamp.front();
    if (t >= 1.0) return kRamp.back();
    const double pos = t * static_cast<double>(kRamp.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    Color c{};
    for (std::size_t k = 0; k < 3; ++k) {
        c[k] = static_cast<std::uint8_t>(std::lround((1.0 - f) * kRamp[i][k] + f * kRamp[i + 1][k]));
    }
    return c;
}

Rendering render_labels(const Raster& labels, const Palette& palette, std::size_t num_classes) {
    if (palette.size() < num_classes) {
        fail(ErrorCode::invalid_argument, "palette has " + std::to_string(palette.size()) + " colors for " +
                                              std::to_string(num_classes) + " classes");
    }
    Rendering r{Raster(RasterKind::rgb, labels.width(), labels.height(), 3), {}};
    for (std::size_t y = 0; y < labels.height(); ++y) {
        for (std::size_t x = 0; x < labels.width(); ++x) {
            const std::int32_t l = labels.label(y, x);
            if (!labels.valid(y, x) || l < 0 || static_cast<std::size_t>(l) >= num_classes) continue;
            for (std::size_t k = 0; k < 3; ++k) r.image.at(k, y, x) = palette[static_cast<std::size_t>(l)][k];
        }
    }
    std::ostringstream legend;
    legend << "kind=labels\n";
    for (std::size_t c = 0; c < num_classes; ++c) {
        const Color& col = palette[c];
        legend << c << ' ' << (c < std::size(kSynthNames) ? kSynthNames[c] : "class") << ' ' << int(col[0]) << ' '
               << int(col[1]) << ' ' << int(col[2]) << '\n';
    }
    r.legend = legend.str();
    return r;
}

Rendering render_scalar(const Raster& map, std::optional<RenderRange> range, const std::string& title) {
    RenderRange rr;
    if (range) {
        rr = *range;
    } else {
        bool any = false;
        for (std::size_t y = 0; y < map.height(); ++y) {
            for (std::size_t x = 0; x < map.width(); ++x) {
                if (!map.valid(y, x)) continue;
                const float v = map.at(y, x);
                rr.low = any ? std::min(rr.low, v) : v;
                rr.high = any ? std::max(rr.high, v) : v;
                any = true;
            }
        }
    }
    if (!(rr.high >= rr.low)) fail(ErrorCode::invalid_argument, "render range must satisfy low <= high");
    const double span = static_cast<double>(rr.high) - static_cast<double>(rr.low);
    Rendering r{Raster(RasterKind::rgb, map.width(), map.height(), 3), {}};
    for (std::size_t y = 0; y < map.height(); ++y) {
        for (std::size_t x = 0; x < map.width(); ++x) {
            if (!map.valid(y, x)) continue;
            const double t = span > 0.0 ? (map.at(y, x) - static_cast<double>(rr.low)) / span : 0.0;
            const Color c = ramp_color(t);
            for (std::size_t k = 0; k < 3; ++k) r.image.at(k, y, x) = c[k];
        }
    }
    std::ostringstream legend;
    legend << "kind=" << title << "\nlow=" << rr.low << "\nhigh=" << rr.high << "\n";
    for (std::size_t i = 0; i < kRamp.size(); ++i) {
        const double v = rr.low + span * static_cast<double>(i) / static_cast<double>(kRamp.size() - 1);
        legend << "stop " << v << ' ' << int(kRamp[i][0]) << ' ' << int(kRamp[i][1]) << ' ' << int(kRamp[i][2])
               << '\n';
    }
    r.legend = legend.str();
    return r;
}

}  // namespace aeromtl
