#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aeromtl/model.hpp"
#include "aeromtl/tensor.hpp"

namespace aeromtl {

/// How the per-task loss scales k_t of L = sum_t k_t L_t are chosen.
enum class Strategy { equal, gradnorm, mgda, mgda_ub };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy strategy);

struct TaskWeights {
    std::vector<float> k;
    Strategy strategy = Strategy::equal;
    /// Min-norm coefficient for the MGDA variants.
    std::optional<double> gamma;
    /// Length of each stored per-task gradient vector (MGDA variants).
    std::size_t gradient_elements = 0;

    static TaskWeights equal(std::size_t tasks = 2);
};

/// Per-task losses of one iteration and their weighted combination.
struct LossBundle {
    std::vector<Tensor> losses;
    Tensor combined;
};

/// Differentiable sum_t k_t L_t. A non-finite loss is training_diverged.
Tensor combine_losses(Graph& graph, std::span<const Tensor> losses, const TaskWeights& weights);
LossBundle make_loss_bundle(Graph& graph, std::vector<Tensor> losses, const TaskWeights& weights);

struct MinNormResult {
    double gamma = 0.5;
    double min_norm_sq = 0.0;
};

/// argmin over gamma in [0,1] of |gamma g1 + (1 - gamma) g2|^2, in closed
/// form. Near-identical inputs (|g1 - g2|^2 < 1e-12) return gamma = 0.5.
MinNormResult min_norm_2task(std::span<const float> g1, std::span<const float> g2);

/// Concatenation of the gradient buffers of `tensors` in order (zeros where
/// a tensor has no gradient yet).
std::vector<float> flatten_grads(std::span<const Tensor> tensors);

/// MGDA on the gradients of every shared parameter. Runs one backward pass
/// per task on `graph` and leaves all parameter gradients zeroed.
TaskWeights mgda_weights(Graph& graph, const MtlModel& model, const Tensor& loss_height,
                         const Tensor& loss_semantics);

/// MGDA on the gradients with respect to the last shared activation.
TaskWeights mgda_ub_weights(Graph& graph, const MtlModel& model, const Tensor& loss_height,
                            const Tensor& loss_semantics, const Tensor& last_shared);

struct GradNormOptions {
    double alpha = 1.5;
    double lr = 0.025;
    double floor = 1e-4;
};

/// Learnable loss weights w_t balancing gradient norms at the last shared
/// layer against each task's relative inverse training rate.
class GradNormState {
public:
    explicit GradNormState(std::size_t tasks = 2, GradNormOptions options = {});

    const GradNormOptions& options() const noexcept { return options_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> initial_losses() const noexcept { return initial_losses_; }
    bool initialized() const noexcept { return !initial_losses_.empty(); }

    /// One update from the current losses L_t and the unweighted gradient
    /// norms |grad_W L_t|. The first call captures L_t(0). Non-finite inputs
    /// skip the update and keep the previous weights.
    TaskWeights update(std::span<const double> losses, std::span<const double> grad_norms);

private:
    void renormalize();

    GradNormOptions options_;
    std::vector<double> weights_;
    std::vector<double> initial_losses_;
};

/// Measures |grad_W L_t| for W = model.last_shared_weight() with one backward
/// pass per task, then applies GradNormState::update. Leaves parameter
/// gradients zeroed.
TaskWeights gradnorm_update(GradNormState& state, Graph& graph, const MtlModel& model, const Tensor& loss_height,
                            const Tensor& loss_semantics);

}  // namespace aeromtl
