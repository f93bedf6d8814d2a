#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "aeromtl/model.hpp"
#include "aeromtl/random.hpp"
#include "aeromtl/raster.hpp"

namespace aeromtl {

inline constexpr std::size_t kDefaultWindow = 1024;
inline constexpr std::size_t kDefaultStride = 256;
inline constexpr std::size_t kDefaultMcSamples = 30;

/// Separable window of per-pixel blending weights, stored in double.
class GaussianWindow {
public:
    /// sigma <= 0 selects size / 4.
    GaussianWindow(std::size_t size, std::size_t stride, double sigma = 0.0);

    /// All-ones weights.
    static GaussianWindow uniform(std::size_t size, std::size_t stride);

    std::size_t size() const noexcept { return size_; }
    std::size_t stride() const noexcept { return stride_; }
    double sigma() const noexcept { return sigma_; }
    double weight(std::size_t y, std::size_t x) const { return weights_[y * size_ + x]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Same window with every weight multiplied by `factor`.
    GaussianWindow scaled(double factor) const;

private:
    GaussianWindow() = default;

    std::size_t size_ = 0;
    std::size_t stride_ = 0;
    double sigma_ = 0.0;
    std::vector<double> weights_;
};

/// Window origins along one axis of the reflection-padded input.
struct TileLayout {
    std::size_t extent = 0;      // original extent
    std::size_t pad_before = 0;  // margin (size - stride) / 2
    std::size_t pad_after = 0;
    std::vector<std::size_t> origins;  // in padded coordinates

    std::size_t padded() const { return extent + pad_before + pad_after; }
};

/// Throws invalid-argument when the reflection padding would exceed
/// extent - 1 (the tile is too small for one window).
TileLayout plan_tiles(std::size_t extent, const GaussianWindow& window);

/// Index into [0, n) under reflection without edge repetition.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// Height and class scores of one window, each plane window.size()^2 long.
struct PatchPrediction {
    std::vector<float> height;
    /// num_classes planes; may be empty when scores are not requested.
    std::vector<float> logits;
};

using PatchPredictor = std::function<PatchPrediction(const Raster& patch)>;

struct TiledPrediction {
    Raster height;
    Raster labels;  // empty when no logits were produced
    Raster logits;  // kind height, one channel per class; empty likewise
};

/// Runs `predict` on every window of the padded input (row-major order),
/// accumulates weight * prediction and the weights themselves in double,
/// normalizes, and crops back to the input extent. Labels are the argmax of
/// blended logits with ties to the lowest class.
TiledPrediction blend_tiles(const Raster& rgb, const GaussianWindow& window, std::size_t num_classes,
                            const PatchPredictor& predict);

/// Sum over windows of normalized weights at every pixel of an h x w input.
std::vector<double> normalized_weight_sum(std::size_t height, std::size_t width, const GaussianWindow& window);

/// Predictor running the model on a patch of 8-bit RGB.
PatchPredictor model_predictor(const MtlModel& model, ForwardMode mode, Rng* rng, Heads heads = Heads::both);

TiledPrediction tiled_predict(const MtlModel& model, const Raster& rgb, const GaussianWindow& window,
                              ForwardMode mode = ForwardMode::eval, Rng* rng = nullptr, Heads heads = Heads::both);

struct UncertaintyResult {
    Raster mean_height;
    Raster std_height;
    std::size_t samples = 0;
};

/// `samples` tiled passes in mc_dropout mode; per-pixel mean and population
/// standard deviation of height.
UncertaintyResult mc_dropout_uncertainty(const MtlModel& model, const Raster& rgb, const GaussianWindow& window,
                                         std::size_t samples, Rng& rng);

}  // namespace aeromtl
