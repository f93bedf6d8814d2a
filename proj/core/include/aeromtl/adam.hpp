#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aeromtl/tensor.hpp"

namespace aeromtl {

struct AdamOptions {
    float lr = 2e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// Per-parameter moment buffers plus the shared step counter.
class AdamState {
public:
    AdamState() = default;
    AdamState(std::span<const Tensor> params, AdamOptions options = {});

    const AdamOptions& options() const noexcept { return options_; }
    void set_lr(float lr) noexcept { options_.lr = lr; }
    std::uint64_t step_count() const noexcept { return t_; }
    std::size_t size() const noexcept { return m_.size(); }
    std::span<const float> first_moment(std::size_t i) const { return m_.at(i); }
    std::span<const float> second_moment(std::size_t i) const { return v_.at(i); }

    /// Bias-corrected Adam update of `params` from their `grad()` buffers.
    /// Throws training_diverged (leaving everything untouched) on a
    /// non-finite gradient. Parameters without a gradient buffer are skipped.
    void step(std::span<Tensor> params);

private:
    AdamOptions options_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    std::uint64_t t_ = 0;
};

inline void adam_step(std::span<Tensor> params, AdamState& state) { state.step(params); }

}  // namespace aeromtl
