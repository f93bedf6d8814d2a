#include "aeromtl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "aeromtl/checkpoint.hpp"
#include "aeromtl/errors.hpp"
#include "aeromtl/log.hpp"

namespace aeromtl {

namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kDropoutStream = 0xd409;
constexpr std::size_t kMaxRedraws = 100;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Heads heads_for(TrainTasks tasks) {
    switch (tasks) {
    case TrainTasks::height: return Heads::height_only;
    case TrainTasks::semantics: return Heads::semantics_only;
    default: return Heads::both;
    }
}

}  // namespace

Batch make_batch(std::span<const SamplePair> pairs) {
    if (pairs.empty()) fail(ErrorCode::invalid_argument, "make_batch: empty batch");
    const std::size_t n = pairs.size(), c = pairs[0].image.channels();
    const std::size_t h = pairs[0].image.height(), w = pairs[0].image.width(), plane = h * w;
    Batch b{Tensor(Shape{n, c, h, w}), Tensor(Shape{n, 1, h, w}), Tensor(Shape{n, 1, h, w}),
            LabelBatch{n, h, w, std::vector<std::int32_t>(n * plane)}};
    auto image = b.image.data();
    auto height = b.height.data();
    auto mask = b.mask.data();
    for (std::size_t i = 0; i < n; ++i) {
        const SamplePair& p = pairs[i];
        if (p.image.channels() != c || p.image.height() != h || p.image.width() != w || p.height.height() != h ||
            p.height.width() != w || p.labels.height() != h || p.labels.width() != w) {
            fail(ErrorCode::shape, "make_batch: sample " + std::to_string(i) + " differs in size from sample 0");
        }
        const auto src = p.image.values();
        for (std::size_t k = 0; k < c * plane; ++k) image[i * c * plane + k] = normalize_intensity(src[k]);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t k = y * w + x, o = i * plane + k;
                const bool hv = p.height.valid(y, x);
                height[o] = hv ? p.height.at(y, x) : 0.0f;
                mask[o] = hv ? 1.0f : 0.0f;
                b.labels.values[o] = p.labels.valid(y, x) ? p.labels.label(y, x) : kIgnoreIndex;
            }
        }
    }
    return b;
}

double IterationRecord::combined() const {
    double total = 0.0;
    if (!std::isnan(loss_height)) total += static_cast<double>(k1) * loss_height;
    if (!std::isnan(loss_sem)) total += static_cast<double>(k2) * loss_sem;
    return total;
}

std::string format_log_row(const IterationRecord& r) {
    return std::to_string(r.iter) + "," + fmt(r.loss_height) + "," + fmt(r.loss_sem) + "," + fmt(r.k1) + "," +
           fmt(r.k2) + "," + fmt(r.gamma.value_or(std::numeric_limits<double>::quiet_NaN()));
}

std::string format_loss_log(const std::vector<IterationRecord>& records) {
    std::string out = std::string(kLossLogHeader) + "\n";
    for (const auto& r : records) out += format_log_row(r) + "\n";
    return out;
}

Trainer::Trainer(const RunConfig& config, std::vector<Tile> tiles)
    : config_(config),
      tiles_(std::move(tiles)),
      model_((config_.validate(), build_model(config_.model))),
      params_(model_.parameters()),
      adam_(params_, AdamOptions{config_.lr}),
      gradnorm_(2, GradNormOptions{config_.gradnorm_alpha, config_.gradnorm_lr}),
      data_rng_(derive_rng(config_.model.seed, kDataStream)),
      dropout_rng_(derive_rng(config_.model.seed, kDropoutStream)) {
    if (tiles_.empty()) fail(ErrorCode::data, "training needs at least one tile");
    for (const auto& t : tiles_) {
        if (t.rgb.channels() != config_.model.in_channels) {
            fail(ErrorCode::data, "tile has " + std::to_string(t.rgb.channels()) + " channels, in_channels is " +
                                      std::to_string(config_.model.in_channels));
        }
        if (t.rgb.width() < config_.crop_size || t.rgb.height() < config_.crop_size) {
            fail(ErrorCode::invalid_argument, "crop_size " + std::to_string(config_.crop_size) +
                                                  " exceeds tile " + std::to_string(t.rgb.width()) + "x" +
                                                  std::to_string(t.rgb.height()));
        }
    }
}

Batch Trainer::draw_batch() {
    std::vector<SamplePair> pairs;
    pairs.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) {
        const Tile& t = tiles_[uniform_index(data_rng_, tiles_.size())];
        pairs.push_back(augment(sample_crop(t.rgb, t.height, t.labels, config_.crop_size, data_rng_), data_rng_));
    }
    return make_batch(pairs);
}

const IterationRecord& Trainer::step() {
    const Heads heads = heads_for(config_.tasks);
    const bool want_h = heads != Heads::semantics_only, want_s = heads != Heads::height_only;
    for (std::size_t attempt = 0;; ++attempt) {
        if (attempt == kMaxRedraws) {
            fail(ErrorCode::data, std::to_string(kMaxRedraws) + " consecutive batches had no usable pixels");
        }
        const Batch batch = draw_batch();
        Graph graph;
        const ForwardResult out = model_.forward(graph, batch.image, ForwardMode::train, dropout_rng_, heads);
        Tensor lh, ls;
        try {
            if (want_h) lh = l1_loss(graph, out.height, batch.height, batch.mask);
            if (want_s) ls = softmax_cross_entropy(graph, out.logits, batch.labels);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate_loss) throw;
            log_warning(std::string("skipping batch: ") + e.what());
            continue;
        }

        IterationRecord rec;
        rec.iter = log_.size() + 1;
        rec.loss_height = want_h ? lh.item() : std::numeric_limits<double>::quiet_NaN();
        rec.loss_sem = want_s ? ls.item() : std::numeric_limits<double>::quiet_NaN();

        Tensor combined;
        if (want_h && want_s) {
            TaskWeights weights = TaskWeights::equal(2);
            switch (config_.balancing) {
            case Strategy::equal: break;
            case Strategy::gradnorm: weights = gradnorm_update(gradnorm_, graph, model_, lh, ls); break;
            case Strategy::mgda: weights = mgda_weights(graph, model_, lh, ls); break;
            case Strategy::mgda_ub: weights = mgda_ub_weights(graph, model_, lh, ls, out.last_shared); break;
            }
            const Tensor losses[2] = {lh, ls};
            combined = combine_losses(graph, losses, weights);
            rec.k1 = weights.k[0];
            rec.k2 = weights.k[1];
            rec.gamma = weights.gamma;
        } else {
            const Tensor only[1] = {want_h ? lh : ls};
            const float one[1] = {1.0f};
            if (!std::isfinite(only[0].item())) fail(ErrorCode::training_diverged, "training loss is not finite");
            combined = weighted_sum(graph, only, one);
            rec.k1 = want_h ? 1.0f : 0.0f;
            rec.k2 = want_s ? 1.0f : 0.0f;
        }

        zero_grads(params_);
        graph.backward(combined);
        adam_.step(params_);
        log_.push_back(rec);
        return log_.back();
    }
}

void Trainer::write_outputs(const std::filesystem::path& out_dir) const {
    std::filesystem::create_directories(out_dir);
    write_checkpoint(out_dir / "model.ckpt", config_.to_text(), model_);
    const std::string csv = format_loss_log(log_);
    write_file_atomic(out_dir / "loss_log.csv",
                      std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
}

void Trainer::run(const std::optional<std::filesystem::path>& out_dir) {
    while (iteration() < config_.iterations) {
        step();
        const bool last = iteration() == config_.iterations;
        if (out_dir && (last || iteration() % config_.checkpoint_every == 0)) write_outputs(*out_dir);
    }
}

}  // namespace aeromtl
