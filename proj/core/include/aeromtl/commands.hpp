#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "aeromtl/model.hpp"
#include "aeromtl/run_config.hpp"

namespace aeromtl {

// Implementations of the command-line subcommands. Each throws aeromtl::Error
// whose code becomes the process exit status.

/// Config file (optional) overlaid with `overrides`, then validated.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path,
                         const std::map<std::string, std::string>& overrides);

struct TrainSummary {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_log;
    std::size_t iterations = 0;
    double first_loss = 0.0;
    double final_loss = 0.0;
};

TrainSummary cmd_train(const std::optional<std::filesystem::path>& config_path,
                       const std::map<std::string, std::string>& overrides);

/// Rebuilds the model and its run configuration from a checkpoint.
std::pair<RunConfig, MtlModel> load_checkpoint_model(const std::filesystem::path& checkpoint);

struct PredictArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path rgb;
    std::string out_prefix;
    std::optional<std::size_t> window;
    std::optional<std::size_t> stride;
};

/// Writes <prefix>_height.pfm, <prefix>_labels.pgm and colored renders with
/// legend files. Returns the written paths.
std::vector<std::filesystem::path> cmd_predict(const PredictArgs& args);

struct EvaluateArgs {
    std::optional<std::filesystem::path> pred_height;
    std::optional<std::filesystem::path> gt_height;
    std::optional<std::filesystem::path> pred_labels;
    std::optional<std::filesystem::path> gt_labels;
    std::size_t num_classes = 6;
    std::optional<std::filesystem::path> out;
};

/// Returns the key=value report; also writes it to `out` when set.
std::string cmd_evaluate(const EvaluateArgs& args);

struct UncertaintyArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path rgb;
    std::string out_prefix;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> window;
    std::optional<std::size_t> stride;
    std::uint64_t seed = 0;
};

/// Writes <prefix>_std.pfm, <prefix>_mean.pfm and a render of the std map.
std::vector<std::filesystem::path> cmd_uncertainty(const UncertaintyArgs& args);

void cmd_make_height(const std::filesystem::path& dsm, const std::filesystem::path& dem,
                     const std::filesystem::path& out, bool clamp_negative = true);

/// Scenes for seeds seed .. seed + count - 1 plus a manifest.txt listing them.
std::filesystem::path cmd_synth(std::uint64_t seed, std::size_t count, std::size_t size, std::size_t num_classes,
                                const std::filesystem::path& out_dir);

}  // namespace aeromtl
