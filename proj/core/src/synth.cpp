#include "aeromtl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aeromtl/errors.hpp"
#include "aeromtl/random.hpp"

namespace aeromtl {

namespace {

struct Rgb {
    float r, g, b;
};

constexpr Rgb kGroundColor{150, 130, 105};
constexpr Rgb kGrassColor{85, 140, 60};
constexpr Rgb kRoadColor{95, 95, 100};
constexpr Rgb kTreeColor{40, 95, 35};
constexpr Rgb kCarColors[3] = {{200, 30, 30}, {230, 230, 235}, {30, 50, 160}};

class Canvas {
public:
    explicit Canvas(std::size_t size)
        : size_(size), cls_(size * size, 0), height_(size * size, 0.0f), color_(size * size, kGroundColor) {}

    std::size_t size() const { return size_; }
    std::int32_t cls(std::size_t y, std::size_t x) const { return cls_[y * size_ + x]; }
    float height(std::size_t y, std::size_t x) const { return height_[y * size_ + x]; }
    Rgb& color(std::size_t y, std::size_t x) { return color_[y * size_ + x]; }

    void paint(std::size_t y, std::size_t x, SynthClass c, float h, Rgb color) {
        const std::size_t i = y * size_ + x;
        cls_[i] = static_cast<std::int32_t>(c);
        height_[i] = h;
        color_[i] = color;
    }

private:
    std::size_t size_;
    std::vector<std::int32_t> cls_;
    std::vector<float> height_;
    std::vector<Rgb> color_;
};

std::size_t scaled_count(std::size_t size, double per_256) {
    const double area = static_cast<double>(size) * static_cast<double>(size) / (256.0 * 256.0);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(per_256 * area)));
}

std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

float draw_real(Rng& rng, float lo, float hi) { return lo + static_cast<float>(uniform01(rng)) * (hi - lo); }

bool region_is(const Canvas& canvas, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h,
               std::initializer_list<SynthClass> allowed, std::size_t margin) {
    const std::size_t n = canvas.size();
    const std::size_t xa = x0 >= margin ? x0 - margin : 0, ya = y0 >= margin ? y0 - margin : 0;
    const std::size_t xb = std::min(n, x0 + w + margin), yb = std::min(n, y0 + h + margin);
    for (std::size_t y = ya; y < yb; ++y) {
        for (std::size_t x = xa; x < xb; ++x) {
            const auto c = static_cast<SynthClass>(canvas.cls(y, x));
            if (std::find(allowed.begin(), allowed.end(), c) == allowed.end()) return false;
        }
    }
    return true;
}

void draw_roads(Canvas& canvas, Rng& rng) {
    const std::size_t n = canvas.size();
    const std::size_t width = std::max<std::size_t>(3, n / 20);
    const std::size_t roads = scaled_count(n, 2.0);
    for (std::size_t r = 0; r < roads; ++r) {
        const bool vertical = r % 2 == 0;
        const std::size_t pos = draw_between(rng, 0, n - width);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = pos; b < pos + width; ++b) {
                const std::size_t y = vertical ? a : b, x = vertical ? b : a;
                canvas.paint(y, x, SynthClass::road, 0.0f, kRoadColor);
            }
        }
    }
}

void draw_grass(Canvas& canvas, Rng& rng) {
    const std::size_t n = canvas.size();
    for (std::size_t i = 0, count = scaled_count(n, 4.0); i < count; ++i) {
        const std::size_t w = draw_between(rng, n / 10, n / 4 + 1), h = draw_between(rng, n / 10, n / 4 + 1);
        const std::size_t x0 = draw_between(rng, 0, n - std::min(w, n)), y0 = draw_between(rng, 0, n - std::min(h, n));
        for (std::size_t y = y0; y < std::min(n, y0 + h); ++y) {
            for (std::size_t x = x0; x < std::min(n, x0 + w); ++x) {
                if (canvas.cls(y, x) == static_cast<std::int32_t>(SynthClass::ground)) {
                    canvas.paint(y, x, SynthClass::grass, 0.0f, kGrassColor);
                }
            }
        }
    }
}

void draw_cars(Canvas& canvas, Rng& rng) {
    const std::size_t n = canvas.size();
    const std::size_t len = std::max<std::size_t>(3, n / 40), wid = std::max<std::size_t>(2, n / 80);
    std::size_t placed = 0;
    const std::size_t wanted = scaled_count(n, 6.0);
    for (std::size_t attempt = 0; attempt < 400 && placed < wanted; ++attempt) {
        const bool horizontal = uniform_index(rng, 2) == 0;
        const std::size_t w = horizontal ? len : wid, h = horizontal ? wid : len;
        if (w > n || h > n) break;
        const std::size_t x0 = draw_between(rng, 0, n - w), y0 = draw_between(rng, 0, n - h);
        if (!region_is(canvas, x0, y0, w, h, {SynthClass::road}, 1)) continue;
        const Rgb color = kCarColors[uniform_index(rng, 3)];
        for (std::size_t y = y0; y < y0 + h; ++y) {
            for (std::size_t x = x0; x < x0 + w; ++x) canvas.paint(y, x, SynthClass::car, kCarHeight, color);
        }
        ++placed;
    }
}

void draw_buildings(Canvas& canvas, Rng& rng) {
    const std::size_t n = canvas.size();
    std::size_t placed = 0;
    const std::size_t wanted = scaled_count(n, 7.0);
    for (std::size_t attempt = 0; attempt < 400 && placed < wanted; ++attempt) {
        const std::size_t w = draw_between(rng, std::max<std::size_t>(4, n / 16), std::max<std::size_t>(6, n / 6));
        const std::size_t h = draw_between(rng, std::max<std::size_t>(4, n / 16), std::max<std::size_t>(6, n / 6));
        if (w >= n || h >= n) continue;
        const std::size_t x0 = draw_between(rng, 0, n - w), y0 = draw_between(rng, 0, n - h);
        if (!region_is(canvas, x0, y0, w, h, {SynthClass::ground, SynthClass::grass}, 2)) continue;
        const float height = draw_real(rng, kBuildingMinHeight, kBuildingMaxHeight);
        // Taller roofs are brighter and bluer.
        const float t = (height - kBuildingMinHeight) / (kBuildingMaxHeight - kBuildingMinHeight);
        const Rgb roof{170.0f + 60.0f * t, 80.0f + 120.0f * t, 70.0f + 170.0f * t};
        for (std::size_t y = y0; y < y0 + h; ++y) {
            for (std::size_t x = x0; x < x0 + w; ++x) canvas.paint(y, x, SynthClass::building, height, roof);
        }
        ++placed;
    }
}

void draw_trees(Canvas& canvas, Rng& rng) {
    const std::size_t n = canvas.size();
    std::size_t placed = 0;
    const std::size_t wanted = scaled_count(n, 12.0);
    for (std::size_t attempt = 0; attempt < 600 && placed < wanted; ++attempt) {
        const std::size_t radius = draw_between(rng, std::max<std::size_t>(2, n / 64), std::max<std::size_t>(3, n / 24));
        if (2 * radius + 1 >= n) continue;
        const std::size_t cx = draw_between(rng, radius, n - 1 - radius);
        const std::size_t cy = draw_between(rng, radius, n - 1 - radius);
        if (!region_is(canvas, cx - radius, cy - radius, 2 * radius + 1, 2 * radius + 1,
                       {SynthClass::ground, SynthClass::grass, SynthClass::tree}, 1)) {
            continue;
        }
        const float peak = draw_real(rng, kTreeMinHeight + 1.0f, kTreeMaxHeight);
        const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
        for (std::size_t y = cy - radius; y <= cy + radius; ++y) {
            for (std::size_t x = cx - radius; x <= cx + radius; ++x) {
                const double dx = static_cast<double>(x) - static_cast<double>(cx);
                const double dy = static_cast<double>(y) - static_cast<double>(cy);
                const double d2 = dx * dx + dy * dy;
                if (d2 > r2) continue;
                const float h = kTreeMinHeight + (peak - kTreeMinHeight) * static_cast<float>(1.0 - d2 / r2);
                if (h <= canvas.height(y, x)) continue;
                const float shade = 0.75f + 0.25f * static_cast<float>(1.0 - d2 / r2);
                canvas.paint(y, x, SynthClass::tree, h,
                             Rgb{kTreeColor.r * shade, kTreeColor.g * shade, kTreeColor.b * shade});
            }
        }
        ++placed;
    }
}

// Sun from the upper left: a pixel is shadowed when an object further up-left
// along the diagonal is tall enough to occlude it.
void cast_shadows(Canvas& canvas) {
    constexpr float kShadowPerUnit = 0.35f;
    const std::size_t n = canvas.size();
    std::vector<std::uint8_t> shadow(n * n, 0);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            const float h = canvas.height(y, x);
            if (h <= 0.0f) continue;
            const auto reach = static_cast<std::size_t>(h * kShadowPerUnit);
            for (std::size_t d = 1; d <= reach && y + d < n && x + d < n; ++d) {
                const float occluder_top = h - static_cast<float>(d) / kShadowPerUnit;
                if (canvas.height(y + d, x + d) < occluder_top) shadow[(y + d) * n + x + d] = 1;
            }
        }
    }
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            if (!shadow[y * n + x]) continue;
            Rgb& c = canvas.color(y, x);
            c = Rgb{c.r * 0.55f, c.g * 0.55f, c.b * 0.6f};
        }
    }
}

}  // namespace

SynthScene synth_scene(std::uint64_t seed, std::size_t size, std::size_t num_classes) {
    if (size < 16) fail(ErrorCode::invalid_argument, "synth_scene: size must be >= 16, got " + std::to_string(size));
    if (num_classes < 2 || num_classes > static_cast<std::size_t>(kSynthClasses)) {
        fail(ErrorCode::invalid_argument,
             "synth_scene: num_classes must be in [2, 6], got " + std::to_string(num_classes));
    }
    auto enabled = [&](SynthClass c) { return static_cast<std::size_t>(c) < num_classes; };

    Canvas canvas(size);
    Rng layout = derive_rng(seed, 0x5c3e);
    if (enabled(SynthClass::road)) draw_roads(canvas, layout);
    if (enabled(SynthClass::grass)) draw_grass(canvas, layout);
    if (enabled(SynthClass::car)) draw_cars(canvas, layout);
    draw_buildings(canvas, layout);
    if (enabled(SynthClass::tree)) draw_trees(canvas, layout);
    cast_shadows(canvas);

    SynthScene scene{Raster(RasterKind::rgb, size, size, 3), Raster(RasterKind::height, size, size, 1),
                     Raster(RasterKind::labels, size, size, 1)};
    Rng noise = derive_rng(seed, 0x7e47);
    std::normal_distribution<float> gauss(0.0f, 6.0f);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            scene.labels.at(y, x) = static_cast<float>(canvas.cls(y, x));
            scene.height.at(y, x) = canvas.height(y, x);
            const Rgb c = canvas.color(y, x);
            const float channel[3] = {c.r, c.g, c.b};
            for (std::size_t k = 0; k < 3; ++k) {
                scene.rgb.at(k, y, x) = std::clamp(std::round(channel[k] + gauss(noise)), 0.0f, 255.0f);
            }
        }
    }
    return scene;
}

}  // namespace aeromtl
