#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aeromtl/balancing.hpp"
#include "aeromtl/model.hpp"

namespace aeromtl {

enum class Resolution { vhr, lr };
Resolution parse_resolution(std::string_view name);
std::string_view to_string(Resolution resolution);

/// Which heads a run trains.
enum class TrainTasks { both, height, semantics };
TrainTasks parse_train_tasks(std::string_view name);
std::string_view to_string(TrainTasks tasks);

/// Every knob of a run. Text form: one `key = value` per line, `#` starts a
/// comment, unknown keys are rejected.
struct RunConfig {
    ModelConfig model;

    Strategy balancing = Strategy::equal;
    double gradnorm_alpha = 1.5;
    double gradnorm_lr = 0.025;
    TrainTasks tasks = TrainTasks::both;

    float lr = 2e-4f;
    std::size_t crop_size = 320;
    std::size_t iterations = 20000;
    std::size_t batch_size = 4;
    std::size_t checkpoint_every = 1000;

    std::string manifest;
    std::string out_dir = "run";
    Resolution resolution = Resolution::vhr;
    std::size_t resolution_factor = 10;

    std::size_t window = 1024;
    std::size_t stride = 256;
    double sigma = 0.0;  // 0 selects window / 4
    std::size_t mc_samples = 30;

    /// Sets one key from its text value; config error on unknown key or bad value.
    void set(std::string_view key, std::string_view value);
    /// Checks every field; config error naming the first violation.
    void validate() const;
    std::string to_text() const;

    static RunConfig parse(std::string_view text, std::string_view source = "config");
    static RunConfig load(const std::filesystem::path& path);
    static const std::vector<std::string>& keys();
};

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace aeromtl
