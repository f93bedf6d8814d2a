#include "aeromtl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

std::string dims(const Raster& r) { return std::to_string(r.width()) + "x" + std::to_string(r.height()); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

RegressionReport regression_metrics(const Raster& pred, const Raster& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height() || pred.channels() != 1 || gt.channels() != 1) {
        fail(ErrorCode::shape, "regression_metrics: prediction " + dims(pred) + "x" +
                                   std::to_string(pred.channels()) + " vs ground truth " + dims(gt) + "x" +
                                   std::to_string(gt.channels()));
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < gt.height(); ++y) {
        for (std::size_t x = 0; x < gt.width(); ++x) {
            if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
            const double d = static_cast<double>(gt.at(y, x)) - static_cast<double>(pred.at(y, x));
            if (!std::isfinite(d)) continue;
            abs_sum += std::abs(d);
            sq_sum += d * d;
            ++n;
        }
    }
    if (n == 0) fail(ErrorCode::empty_evaluation, "regression_metrics: no pixel is valid in both rasters");
    RegressionReport r;
    r.count = n;
    r.mae = abs_sum / static_cast<double>(n);
    r.mse = sq_sum / static_cast<double>(n);
    r.rmse = std::sqrt(r.mse);
    return r;
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : classes_(num_classes) {
    if (num_classes < 1) fail(ErrorCode::invalid_argument, "confusion matrix needs at least one class");
    counts_.assign(num_classes * num_classes, 0);
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto v : counts_) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
    std::uint64_t t = 0;
    for (std::size_t j = 0; j < classes_; ++j) t += at(c, j);
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < classes_; ++i) t += at(i, c);
    return t;
}

void ConfusionMatrix::accumulate(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
                                 std::size_t width, std::int32_t ignore_index) {
    if (pred.size() != gt.size() || width == 0 || gt.size() % width != 0) {
        fail(ErrorCode::shape, "confusion accumulate: " + std::to_string(pred.size()) + " predictions vs " +
                                   std::to_string(gt.size()) + " ground-truth labels");
    }
    const auto C = static_cast<std::int32_t>(classes_);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == ignore_index) continue;
        const char* which = nullptr;
        std::int32_t bad = 0;
        if (gt[i] < 0 || gt[i] >= C) {
            which = "ground-truth";
            bad = gt[i];
        } else if (pred[i] < 0 || pred[i] >= C) {
            which = "predicted";
            bad = pred[i];
        }
        if (which) {
            fail(ErrorCode::data, std::string(which) + " label " + std::to_string(bad) + " at (x=" +
                                      std::to_string(i % width) + ", y=" + std::to_string(i / width) +
                                      ") is outside [0, " + std::to_string(C) + ")");
        }
        ++at(static_cast<std::size_t>(gt[i]), static_cast<std::size_t>(pred[i]));
    }
}

void ConfusionMatrix::accumulate(const Raster& pred, const Raster& gt, std::int32_t ignore_index) {
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
        fail(ErrorCode::shape, "confusion accumulate: prediction " + dims(pred) + " vs ground truth " + dims(gt));
    }
    std::vector<std::int32_t> p(gt.pixels()), g(gt.pixels());
    for (std::size_t y = 0; y < gt.height(); ++y) {
        for (std::size_t x = 0; x < gt.width(); ++x) {
            const std::size_t i = y * gt.width() + x;
            const bool usable = gt.valid(y, x) && pred.valid(y, x);
            g[i] = usable ? gt.label(y, x) : ignore_index;
            p[i] = pred.label(y, x);
        }
    }
    accumulate(p, g, gt.width(), ignore_index);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) {
        fail(ErrorCode::shape, "cannot add confusion matrices of " + std::to_string(classes_) + " and " +
                                   std::to_string(other.classes_) + " classes");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

void ConfusionMatrix::require_nonempty() const {
    if (total() == 0) fail(ErrorCode::empty_evaluation, "confusion matrix is empty (every pixel ignored)");
}

double ConfusionMatrix::oa() const {
    require_nonempty();
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < classes_; ++c) diag += at(c, c);
    return static_cast<double>(diag) / static_cast<double>(total());
}

std::optional<double> ConfusionMatrix::recall(std::size_t c) const {
    const std::uint64_t row = row_sum(c);
    if (row == 0) return std::nullopt;
    return static_cast<double>(at(c, c)) / static_cast<double>(row);
}

double ConfusionMatrix::aa() const {
    require_nonempty();
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes_; ++c) {
        if (auto r = recall(c)) {
            sum += *r;
            ++present;
        }
    }
    return sum / static_cast<double>(present);
}

double ConfusionMatrix::kappa() const {
    require_nonempty();
    const double n = static_cast<double>(total());
    const double po = oa();
    double pe = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) {
        pe += static_cast<double>(row_sum(c)) * static_cast<double>(col_sum(c));
    }
    pe /= n * n;
    if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

std::string format_report(const std::optional<RegressionReport>& regression, const ConfusionMatrix* confusion) {
    std::ostringstream out;
    if (regression) {
        out << "mae=" << fmt(regression->mae) << "\nmse=" << fmt(regression->mse) << "\nrmse="
            << fmt(regression->rmse) << "\nheight_pixels=" << regression->count << "\n";
    }
    if (confusion) {
        out << "oa=" << fmt(confusion->oa()) << "\naa=" << fmt(confusion->aa()) << "\nkappa="
            << fmt(confusion->kappa()) << "\nlabel_pixels=" << confusion->total() << "\n";
        for (std::size_t c = 0; c < confusion->num_classes(); ++c) {
            const auto r = confusion->recall(c);
            out << "recall_" << c << "=" << (r ? fmt(*r) : std::string("nan")) << "\n";
        }
    }
    return out.str();
}

}  // namespace aeromtl
