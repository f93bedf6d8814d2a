#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeromtl/ops.hpp"
#include "aeromtl/raster.hpp"

namespace aeromtl {

struct RegressionReport {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
};

/// Over pixels valid in both rasters. No such pixel is empty-evaluation.
RegressionReport regression_metrics(const Raster& pred, const Raster& gt);

/// C x C counts, rows ground truth, columns prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);

    std::size_t num_classes() const noexcept { return classes_; }
    std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * classes_ + pred]; }
    std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts_[gt * classes_ + pred]; }
    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t c) const;
    std::uint64_t col_sum(std::size_t c) const;

    /// Adds pixels whose ground truth is not `ignore_index` and valid in both
    /// rasters. A label outside [0, C) is a data error naming the pixel.
    void accumulate(const Raster& pred, const Raster& gt, std::int32_t ignore_index = kIgnoreIndex);
    /// Same over flat row-major label arrays of the given width.
    void accumulate(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt, std::size_t width,
                    std::int32_t ignore_index = kIgnoreIndex);

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

    double oa() const;
    /// Mean recall over classes present in the ground truth.
    double aa() const;
    /// (p_o - p_e) / (1 - p_e); when p_e = 1 this is 1 if p_o = 1, else 0.
    double kappa() const;
    /// Recall of class c, or nullopt when c never occurs in the ground truth.
    std::optional<double> recall(std::size_t c) const;

private:
    void require_nonempty() const;

    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
};

/// Flat key=value report (mae, mse, rmse, oa, aa, kappa, recall_<c>).
std::string format_report(const std::optional<RegressionReport>& regression, const ConfusionMatrix* confusion);

}  // namespace aeromtl
