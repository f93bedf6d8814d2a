#include "aeromtl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aeromtl/errors.hpp"

namespace aeromtl {

GaussianWindow::GaussianWindow(std::size_t size, std::size_t stride, double sigma) {
    if (size == 0) fail(ErrorCode::invalid_argument, "window size must be positive");
    if (stride == 0 || stride > size) {
        fail(ErrorCode::invalid_argument, "window stride must be in [1, " + std::to_string(size) + "], got " +
                                              std::to_string(stride));
    }
    size_ = size;
    stride_ = stride;
    sigma_ = sigma > 0.0 ? sigma : static_cast<double>(size) / 4.0;
    std::vector<double> profile(size);
    const double centre = (static_cast<double>(size) - 1.0) / 2.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = (static_cast<double>(i) - centre) / sigma_;
        profile[i] = std::exp(-0.5 * d * d);
    }
    weights_.resize(size * size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) weights_[y * size + x] = profile[y] * profile[x];
    }
}

GaussianWindow GaussianWindow::uniform(std::size_t size, std::size_t stride) {
    GaussianWindow w(size, stride);
    std::fill(w.weights_.begin(), w.weights_.end(), 1.0);
    w.sigma_ = std::numeric_limits<double>::infinity();
    return w;
}

GaussianWindow GaussianWindow::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        fail(ErrorCode::invalid_argument, "window scale must be positive and finite");
    }
    GaussianWindow w = *this;
    for (double& v : w.weights_) v *= factor;
    return w;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (last == 0) return 0;
    while (i < 0 || i > last) {
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
    }
    return static_cast<std::size_t>(i);
}

TileLayout plan_tiles(std::size_t extent, const GaussianWindow& window) {
    const std::size_t w = window.size(), s = window.stride();
    TileLayout layout;
    layout.extent = extent;
    layout.pad_before = (w - s) / 2;
    std::size_t covered = layout.pad_before + extent;
    if (covered < w) {
        layout.pad_after = w - covered;
    } else {
        layout.pad_after = (s - (covered - w) % s) % s;
    }
    if (extent == 0 || layout.pad_before > extent - 1 || layout.pad_after > extent - 1) {
        fail(ErrorCode::invalid_argument,
             "tile extent " + std::to_string(extent) + " is too small for window " + std::to_string(w) + " stride " +
                 std::to_string(s) + " (reflection padding of " + std::to_string(std::max(layout.pad_before,
                                                                                          layout.pad_after)) +
                 " pixels needs an extent of at least " +
                 std::to_string(std::max(layout.pad_before, layout.pad_after) + 1) + ")");
    }
    for (std::size_t o = 0; o + w <= layout.padded(); o += s) layout.origins.push_back(o);
    return layout;
}

namespace {

Raster extract_patch(const Raster& rgb, const TileLayout& ly, const TileLayout& lx, std::size_t oy, std::size_t ox,
                     std::size_t size) {
    Raster patch(rgb.kind(), size, size, rgb.channels());
    for (std::size_t y = 0; y < size; ++y) {
        const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(oy + y) -
                                                 static_cast<std::ptrdiff_t>(ly.pad_before),
                                             rgb.height());
        for (std::size_t x = 0; x < size; ++x) {
            const std::size_t sx = reflect_index(static_cast<std::ptrdiff_t>(ox + x) -
                                                     static_cast<std::ptrdiff_t>(lx.pad_before),
                                                 rgb.width());
            for (std::size_t c = 0; c < rgb.channels(); ++c) patch.at(c, y, x) = rgb.at(c, sy, sx);
        }
    }
    return patch;
}

}  // namespace

TiledPrediction blend_tiles(const Raster& rgb, const GaussianWindow& window, std::size_t num_classes,
                            const PatchPredictor& predict) {
    const TileLayout ly = plan_tiles(rgb.height(), window);
    const TileLayout lx = plan_tiles(rgb.width(), window);
    const std::size_t w = window.size();
    const std::size_t H = rgb.height(), W = rgb.width(), P = H * W;

    std::vector<double> acc_weight(P, 0.0), acc_height(P, 0.0), acc_logits;
    bool have_logits = false;

    for (std::size_t oy : ly.origins) {
        for (std::size_t ox : lx.origins) {
            const PatchPrediction pred = predict(extract_patch(rgb, ly, lx, oy, ox, w));
            if (pred.height.size() != w * w) {
                fail(ErrorCode::shape, "patch predictor returned " + std::to_string(pred.height.size()) +
                                           " height values, expected " + std::to_string(w * w));
            }
            if (!pred.logits.empty()) {
                if (pred.logits.size() != num_classes * w * w) {
                    fail(ErrorCode::shape, "patch predictor returned " + std::to_string(pred.logits.size()) +
                                               " scores, expected " + std::to_string(num_classes * w * w));
                }
                if (!have_logits) acc_logits.assign(num_classes * P, 0.0);
                have_logits = true;
            }
            for (std::size_t py = 0; py < w; ++py) {
                const std::size_t gy = oy + py;
                if (gy < ly.pad_before || gy >= ly.pad_before + H) continue;
                const std::size_t y = gy - ly.pad_before;
                for (std::size_t px = 0; px < w; ++px) {
                    const std::size_t gx = ox + px;
                    if (gx < lx.pad_before || gx >= lx.pad_before + W) continue;
                    const std::size_t x = gx - lx.pad_before;
                    const double wt = window.weight(py, px);
                    const std::size_t i = y * W + x, j = py * w + px;
                    acc_weight[i] += wt;
                    acc_height[i] += wt * pred.height[j];
                    if (have_logits) {
                        for (std::size_t c = 0; c < num_classes; ++c) {
                            acc_logits[c * P + i] += wt * pred.logits[c * w * w + j];
                        }
                    }
                }
            }
        }
    }

    TiledPrediction out;
    out.height = Raster(RasterKind::height, W, H, 1);
    for (std::size_t i = 0; i < P; ++i) out.height.values()[i] = static_cast<float>(acc_height[i] / acc_weight[i]);
    if (have_logits) {
        out.logits = Raster(RasterKind::height, W, H, num_classes);
        out.labels = Raster(RasterKind::labels, W, H, 1);
        for (std::size_t i = 0; i < P; ++i) {
            std::size_t best = 0;
            float best_value = 0.0f;
            for (std::size_t c = 0; c < num_classes; ++c) {
                const float v = static_cast<float>(acc_logits[c * P + i] / acc_weight[i]);
                out.logits.values()[c * P + i] = v;
                if (c == 0 || v > best_value) {
                    best = c;
                    best_value = v;
                }
            }
            out.labels.values()[i] = static_cast<float>(best);
        }
    }
    return out;
}

std::vector<double> normalized_weight_sum(std::size_t height, std::size_t width, const GaussianWindow& window) {
    const TileLayout ly = plan_tiles(height, window);
    const TileLayout lx = plan_tiles(width, window);
    const std::size_t w = window.size();
    std::vector<double> total(height * width, 0.0);
    auto each = [&](auto&& fn) {
        for (std::size_t oy : ly.origins) {
            for (std::size_t ox : lx.origins) {
                for (std::size_t py = 0; py < w; ++py) {
                    const std::size_t gy = oy + py;
                    if (gy < ly.pad_before || gy >= ly.pad_before + height) continue;
                    for (std::size_t px = 0; px < w; ++px) {
                        const std::size_t gx = ox + px;
                        if (gx < lx.pad_before || gx >= lx.pad_before + width) continue;
                        fn((gy - ly.pad_before) * width + gx - lx.pad_before, window.weight(py, px));
                    }
                }
            }
        }
    };
    each([&](std::size_t i, double wt) { total[i] += wt; });
    std::vector<double> sum(height * width, 0.0);
    each([&](std::size_t i, double wt) { sum[i] += wt / total[i]; });
    return sum;
}

PatchPredictor model_predictor(const MtlModel& model, ForwardMode mode, Rng* rng, Heads heads) {
    if (mode != ForwardMode::eval && rng == nullptr) {
        fail(ErrorCode::invalid_argument, "stochastic forward modes need a random generator");
    }
    return [&model, mode, rng, heads](const Raster& patch) {
        const std::size_t h = patch.height(), w = patch.width(), c = patch.channels();
        Tensor image(Shape{1, c, h, w});
        auto data = image.data();
        const auto values = patch.values();
        for (std::size_t i = 0; i < values.size(); ++i) data[i] = normalize_intensity(values[i]);
        Graph graph(false);
        Rng unused(0);
        const ForwardResult r = model.forward(graph, image, mode, rng ? *rng : unused, heads);
        PatchPrediction pred;
        if (r.height.defined()) {
            pred.height.assign(r.height.data().begin(), r.height.data().end());
        } else {
            pred.height.assign(h * w, 0.0f);
        }
        if (r.logits.defined()) pred.logits.assign(r.logits.data().begin(), r.logits.data().end());
        return pred;
    };
}

TiledPrediction tiled_predict(const MtlModel& model, const Raster& rgb, const GaussianWindow& window,
                              ForwardMode mode, Rng* rng, Heads heads) {
    if (rgb.channels() != model.config().in_channels) {
        fail(ErrorCode::shape, "input has " + std::to_string(rgb.channels()) + " channels, model expects " +
                                   std::to_string(model.config().in_channels));
    }
    if (window.size() % model.config().spatial_multiple() != 0) {
        fail(ErrorCode::shape, "window " + std::to_string(window.size()) + " must be a multiple of " +
                                   std::to_string(model.config().spatial_multiple()));
    }
    return blend_tiles(rgb, window, model.config().num_classes, model_predictor(model, mode, rng, heads));
}

UncertaintyResult mc_dropout_uncertainty(const MtlModel& model, const Raster& rgb, const GaussianWindow& window,
                                         std::size_t samples, Rng& rng) {
    if (samples == 0) fail(ErrorCode::invalid_argument, "mc dropout needs at least one sample");
    const std::size_t P = rgb.pixels();
    std::vector<double> mean(P, 0.0), m2(P, 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        const TiledPrediction pred = tiled_predict(model, rgb, window, ForwardMode::mc_dropout, &rng,
                                                   Heads::height_only);
        const auto h = pred.height.values();
        const double n = static_cast<double>(s + 1);
        for (std::size_t i = 0; i < P; ++i) {
            const double delta = h[i] - mean[i];
            mean[i] += delta / n;
            m2[i] += delta * (h[i] - mean[i]);
        }
    }
    UncertaintyResult out{Raster(RasterKind::height, rgb.width(), rgb.height(), 1),
                          Raster(RasterKind::height, rgb.width(), rgb.height(), 1), samples};
    for (std::size_t i = 0; i < P; ++i) {
        out.mean_height.values()[i] = static_cast<float>(mean[i]);
        out.std_height.values()[i] = static_cast<float>(std::sqrt(std::max(0.0, m2[i] / static_cast<double>(samples))));
    }
    return out;
}

}  // namespace aeromtl
