#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aeromtl/adam.hpp"
#include "aeromtl/balancing.hpp"
#include "aeromtl/dataset.hpp"
#include "aeromtl/model.hpp"
#include "aeromtl/ops.hpp"
#include "aeromtl/run_config.hpp"
#include "aeromtl/sampling.hpp"

namespace aeromtl {

inline constexpr char kLossLogHeader[] = "iter,loss_height,loss_sem,k1,k2,gamma";

/// Network inputs and targets of one batch of crops.
struct Batch {
    Tensor image;   // [N,C,S,S], intensities / 255
    Tensor height;  // [N,1,S,S]
    Tensor mask;    // [N,1,S,S], 1 where the height is valid
    LabelBatch labels;
};

Batch make_batch(std::span<const SamplePair> pairs);

struct IterationRecord {
    std::size_t iter = 0;
    /// NaN for a task the run does not train.
    double loss_height = 0.0;
    double loss_sem = 0.0;
    float k1 = 1.0f;
    float k2 = 1.0f;
    std::optional<double> gamma;

    /// sum_t k_t L_t over the trained tasks.
    double combined() const;
};

std::string format_log_row(const IterationRecord& r);
std::string format_loss_log(const std::vector<IterationRecord>& records);

/// Iteration loop: sample batch, forward, per-task losses, balancing,
/// combined backward, Adam.
class Trainer {
public:
    Trainer(const RunConfig& config, std::vector<Tile> tiles);

    const RunConfig& config() const noexcept { return config_; }
    const MtlModel& model() const noexcept { return model_; }
    MtlModel& model() noexcept { return model_; }
    const std::vector<IterationRecord>& log() const noexcept { return log_; }
    std::size_t iteration() const noexcept { return log_.size(); }

    /// Runs one iteration. Batches whose losses are degenerate are redrawn.
    const IterationRecord& step();

    /// Runs the remaining iterations. With `out_dir` set, writes
    /// model.ckpt and loss_log.csv there every checkpoint_every iterations
    /// and at the end; a divergence leaves the last written files in place.
    void run(const std::optional<std::filesystem::path>& out_dir = std::nullopt);

    void write_outputs(const std::filesystem::path& out_dir) const;

private:
    Batch draw_batch();

    RunConfig config_;
    std::vector<Tile> tiles_;
    MtlModel model_;
    std::vector<Tensor> params_;
    AdamState adam_;
    GradNormState gradnorm_;
    Rng data_rng_;
    Rng dropout_rng_;
    std::vector<IterationRecord> log_;
};

}  // namespace aeromtl
