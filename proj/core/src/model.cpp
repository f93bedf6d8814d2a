#include "aeromtl/model.hpp"

#include <cmath>
#include <random>

#include "aeromtl/errors.hpp"
#include "aeromtl/ops.hpp"

namespace aeromtl {

void ModelConfig::validate() const {
    auto reject = [](const std::string& why) { fail(ErrorCode::config, "invalid model config: " + why); };
    if (in_channels == 0) reject("in_channels must be >= 1");
    if (num_classes < 2) reject("num_classes must be >= 2");
    if (encoder_depth == 0 || encoder_depth > 8) reject("encoder_depth must lie in [1, 8]");
    if (base_channels == 0) reject("base_channels must be >= 1");
    if (shared_decoder_blocks > encoder_depth) reject("shared_decoder_blocks must not exceed encoder_depth");
    if (!(dropout_p >= 0.0f && dropout_p < 1.0f)) reject("dropout_p must lie in [0, 1)");
}

Task parse_task(std::string_view name) {
    if (name == "height") return Task::height;
    if (name == "semantics") return Task::semantics;
    fail(ErrorCode::invalid_argument, "unknown task '" + std::string(name) + "' (expected height or semantics)");
}

std::string_view to_string(Task task) { return task == Task::height ? "height" : "semantics"; }

std::string_view to_string(ParamGroup group) {
    switch (group) {
    case ParamGroup::shared: return "shared";
    case ParamGroup::height: return "height";
    case ParamGroup::semantics: return "semantics";
    }
    return "unknown";
}

MtlModel::MtlModel(const ModelConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    const std::size_t depth = config_.encoder_depth;

    std::size_t cin = config_.in_channels;
    for (std::size_t level = 0; level <= depth; ++level) {
        const std::size_t c = config_.channels_at(level);
        const std::string prefix = level == depth ? "bottleneck" : "enc" + std::to_string(level);
        Conv a = add_conv(prefix + ".conv1", ParamGroup::shared, cin, c, 3, rng);
        Conv b = add_conv(prefix + ".conv2", ParamGroup::shared, c, c, 3, rng);
        encoder_.emplace_back(std::move(a), std::move(b));
        cin = c;
    }
    last_shared_weight_ = encoder_.back().second.weight;

    const std::size_t shared = config_.shared_decoder_blocks;
    for (std::size_t k = 0; k < shared; ++k) {
        const std::size_t level = depth - 1 - k;
        shared_decoder_.push_back(add_decoder_block("dec" + std::to_string(level), ParamGroup::shared, level, rng));
        last_shared_weight_ = shared_decoder_.back().conv.weight;
    }

    auto build_head = [&](Head& head, const std::string& name, ParamGroup group, std::size_t outputs) {
        for (std::size_t k = shared; k < depth; ++k) {
            const std::size_t level = depth - 1 - k;
            head.blocks.push_back(add_decoder_block(name + ".dec" + std::to_string(level), group, level, rng));
        }
        head.out = add_conv(name + ".out", group, config_.channels_at(0), outputs, 1, rng);
    };
    build_head(height_head_, "height", ParamGroup::height, 1);
    build_head(semantic_head_, "semantics", ParamGroup::semantics, config_.num_classes);
}

MtlModel::Conv MtlModel::add_conv(const std::string& name, ParamGroup group, std::size_t cin, std::size_t cout,
                                  std::size_t kernel, Rng& rng) {
    // He fan-in initialization, zero bias.
    const float stddev = std::sqrt(2.0f / static_cast<float>(cin * kernel * kernel));
    std::normal_distribution<float> normal(0.0f, stddev);
    Tensor weight(Shape{cout, cin, kernel, kernel}, true);
    for (auto& w : weight.data()) w = normal(rng);
    Tensor bias(Shape{cout}, true);
    params_.push_back(Parameter{name + ".weight", group, weight});
    params_.push_back(Parameter{name + ".bias", group, bias});
    return Conv{weight, bias, static_cast<int>(kernel / 2)};
}

MtlModel::DecoderBlock MtlModel::add_decoder_block(const std::string& name, ParamGroup group, std::size_t level,
                                                   Rng& rng) {
    const std::size_t c = config_.channels_at(level);
    DecoderBlock block;
    block.level = level;
    block.up = add_conv(name + ".up", group, config_.channels_at(level + 1), c, 3, rng);
    block.conv = add_conv(name + ".conv", group, config_.skip_connections ? 2 * c : c, c, 3, rng);
    return block;
}

Tensor MtlModel::run_decoder(Graph& graph, const DecoderBlock& block, const Tensor& x,
                             const std::vector<Tensor>& skips) const {
    Tensor y = leaky_relu(graph, upconv2d(graph, x, block.up.weight, block.up.bias), kLeakySlope);
    if (config_.skip_connections) y = concat_channels(graph, y, skips[block.level]);
    return leaky_relu(graph, conv2d(graph, y, block.conv.weight, block.conv.bias, 1, block.conv.padding),
                      kLeakySlope);
}

Tensor MtlModel::run_head(Graph& graph, const Head& head, Tensor x, const std::vector<Tensor>& skips) const {
    for (const auto& block : head.blocks) x = run_decoder(graph, block, x, skips);
    return conv2d(graph, x, head.out.weight, head.out.bias, 1, 0);
}

ForwardResult MtlModel::forward(Graph& graph, const Tensor& image, ForwardMode mode, Rng& rng, Heads heads) const {
    if (image.rank() != 4 || image.dim(1) != config_.in_channels) {
        fail(ErrorCode::shape, "forward: expected input [N," + std::to_string(config_.in_channels) + ",H,W], got " +
                                   shape_to_string(image.shape()));
    }
    const std::size_t multiple = config_.spatial_multiple();
    if (image.dim(2) % multiple != 0 || image.dim(3) % multiple != 0) {
        fail(ErrorCode::shape, "forward: input height and width must be multiples of " + std::to_string(multiple) +
                                   ", got " + shape_to_string(image.shape()));
    }
    const bool active = mode != ForwardMode::eval;
    const float p = config_.dropout_p;
    const std::size_t depth = config_.encoder_depth;

    std::vector<Tensor> skips(depth);
    Tensor x = image;
    for (std::size_t level = 0; level <= depth; ++level) {
        const auto& [a, b] = encoder_[level];
        x = leaky_relu(graph, conv2d(graph, x, a.weight, a.bias, 1, a.padding), kLeakySlope);
        x = leaky_relu(graph, conv2d(graph, x, b.weight, b.bias, 1, b.padding), kLeakySlope);
        // Dropout after the two deepest encoder blocks.
        if (level + 2 > depth) x = dropout(graph, x, p, active, rng);
        if (level < depth) {
            skips[level] = x;
            x = max_pool2(graph, x);
        }
    }
    for (std::size_t k = 0; k < shared_decoder_.size(); ++k) {
        x = run_decoder(graph, shared_decoder_[k], x, skips);
        if (k == 0) x = dropout(graph, x, p, active, rng);
    }

    ForwardResult result;
    result.last_shared = x;
    if (heads != Heads::semantics_only) result.height = run_head(graph, height_head_, x, skips);
    if (heads != Heads::height_only) result.logits = run_head(graph, semantic_head_, x, skips);
    return result;
}

std::vector<Tensor> MtlModel::parameters() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

std::vector<Tensor> MtlModel::shared_parameters() const {
    std::vector<Tensor> out;
    for (const auto& p : params_) {
        if (p.group == ParamGroup::shared) out.push_back(p.value);
    }
    return out;
}

std::vector<Tensor> MtlModel::task_parameters(Task task) const {
    const ParamGroup group = task == Task::height ? ParamGroup::height : ParamGroup::semantics;
    std::vector<Tensor> out;
    for (const auto& p : params_) {
        if (p.group == group) out.push_back(p.value);
    }
    return out;
}

std::size_t MtlModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

std::size_t MtlModel::parameter_count(ParamGroup group) const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        if (p.group == group) n += p.value.numel();
    }
    return n;
}

const Tensor& MtlModel::last_shared_weight() const { return last_shared_weight_; }

std::size_t MtlModel::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return params_.size();
}

MtlModel build_model(const ModelConfig& config, Rng& rng) { return MtlModel(config, rng); }

MtlModel build_model(const ModelConfig& config) {
    Rng rng = derive_rng(config.seed, 0x1d17);
    return MtlModel(config, rng);
}

}  // namespace aeromtl
