#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aeromtl/random.hpp"
#include "aeromtl/tensor.hpp"

namespace aeromtl {

inline constexpr float kLeakySlope = 0.2f;

/// Architecture hyperparameters of the shared-trunk encoder-decoder.
struct ModelConfig {
    std::size_t in_channels = 3;
    std::size_t num_classes = 6;
    std::size_t encoder_depth = 4;
    std::size_t base_channels = 16;
    bool skip_connections = true;
    /// Decoder blocks evaluated before the split into task heads.
    std::size_t shared_decoder_blocks = 1;
    float dropout_p = 0.2f;
    std::uint64_t seed = 0;

    /// Throws ErrorCode::config naming the first violated constraint.
    void validate() const;
    /// Spatial extents of inputs must be multiples of this.
    std::size_t spatial_multiple() const { return std::size_t{1} << encoder_depth; }
    std::size_t channels_at(std::size_t level) const { return base_channels << level; }
};

enum class Task { height, semantics };
enum class ParamGroup { shared, height, semantics };
enum class ForwardMode { train, eval, mc_dropout };
enum class Heads { both, height_only, semantics_only };

/// Parses "height" / "semantics"; anything else is invalid-argument.
Task parse_task(std::string_view name);
std::string_view to_string(Task task);
std::string_view to_string(ParamGroup group);

struct Parameter {
    std::string name;
    ParamGroup group;
    Tensor value;
};

struct ForwardResult {
    Tensor height;       // [N,1,H,W]
    Tensor logits;       // [N,C,H,W]
    Tensor last_shared;  // output of the final shared block
};

class MtlModel {
public:
    MtlModel(const ModelConfig& config, Rng& rng);

    const ModelConfig& config() const noexcept { return config_; }

    /// Dropout is active for train and mc_dropout. `heads` lets single-task
    /// training skip the unused branch; the skipped output is left undefined.
    ForwardResult forward(Graph& graph, const Tensor& image, ForwardMode mode, Rng& rng,
                          Heads heads = Heads::both) const;

    std::span<const Parameter> registry() const noexcept { return params_; }
    std::vector<Tensor> parameters() const;
    std::vector<Tensor> shared_parameters() const;
    std::vector<Tensor> task_parameters(Task task) const;
    std::size_t parameter_count() const;
    std::size_t parameter_count(ParamGroup group) const;

    /// Weight of the last convolution inside the shared trunk.
    const Tensor& last_shared_weight() const;

    /// Index into registry() by name, or registry().size() if absent.
    std::size_t find(std::string_view name) const;

private:
    struct Conv {
        Tensor weight;
        Tensor bias;
        int padding = 1;
    };
    struct DecoderBlock {
        Conv up;
        Conv conv;
        std::size_t level = 0;
    };
    struct Head {
        std::vector<DecoderBlock> blocks;
        Conv out;
    };

    Conv add_conv(const std::string& name, ParamGroup group, std::size_t cin, std::size_t cout, std::size_t kernel,
                  Rng& rng);
    DecoderBlock add_decoder_block(const std::string& name, ParamGroup group, std::size_t level, Rng& rng);
    Tensor run_decoder(Graph& graph, const DecoderBlock& block, const Tensor& x,
                       const std::vector<Tensor>& skips) const;
    Tensor run_head(Graph& graph, const Head& head, Tensor x, const std::vector<Tensor>& skips) const;

    ModelConfig config_;
    std::vector<Parameter> params_;
    std::vector<std::pair<Conv, Conv>> encoder_;  // D pooled blocks + bottleneck
    std::vector<DecoderBlock> shared_decoder_;
    Head height_head_;
    Head semantic_head_;
    Tensor last_shared_weight_;
};

MtlModel build_model(const ModelConfig& config, Rng& rng);
/// Seeds initialization from config.seed.
MtlModel build_model(const ModelConfig& config);

/// 8-bit intensities are fed to the network scaled to [0, 1].
inline float normalize_intensity(float value) { return value / 255.0f; }

}  // namespace aeromtl
