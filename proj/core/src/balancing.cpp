#include "aeromtl/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aeromtl/errors.hpp"
#include "aeromtl/log.hpp"
#include "aeromtl/ops.hpp"

namespace aeromtl {

namespace {

bool all_finite(std::span<const float> values) {
    return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

void zero_parameter_grads(const MtlModel& model) {
    auto params = model.parameters();
    zero_grads(params);
}

// Backward of a single task loss; returns false when the loss cannot be
// differentiated (non-finite value).
bool task_backward(Graph& graph, const MtlModel& model, const Tensor& loss) {
    zero_parameter_grads(model);
    if (!std::isfinite(loss.item())) return false;
    // A loss that does not depend on any parameter has a zero gradient.
    if (loss.requires_grad()) graph.backward(loss);
    return true;
}

TaskWeights mgda_fallback(Strategy strategy, std::size_t elements, const char* why) {
    log_warning(std::string(to_string(strategy)) + ": " + why + "; using equal weights this iteration");
    TaskWeights w;
    w.k = {0.5f, 0.5f};
    w.strategy = strategy;
    w.gamma = 0.5;
    w.gradient_elements = elements;
    return w;
}

TaskWeights weights_from_gamma(Strategy strategy, const MinNormResult& r, std::size_t elements) {
    TaskWeights w;
    w.strategy = strategy;
    w.gamma = r.gamma;
    w.k = {static_cast<float>(r.gamma), static_cast<float>(1.0 - r.gamma)};
    w.gradient_elements = elements;
    if (r.min_norm_sq == 0.0) {
        log_warning(std::string(to_string(strategy)) + ": min-norm direction is zero (gamma = " +
                    std::to_string(r.gamma) + "); shared parameters receive no update");
    }
    return w;
}

double l2_norm(std::span<const float> values) {
    double acc = 0.0;
    for (float v : values) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
    if (name == "equal") return Strategy::equal;
    if (name == "gradnorm") return Strategy::gradnorm;
    if (name == "mgda") return Strategy::mgda;
    if (name == "mgda-ub") return Strategy::mgda_ub;
    fail(ErrorCode::config, "unknown balancing strategy '" + std::string(name) +
                                "' (expected equal, gradnorm, mgda or mgda-ub)");
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
    case Strategy::equal: return "equal";
    case Strategy::gradnorm: return "gradnorm";
    case Strategy::mgda: return "mgda";
    case Strategy::mgda_ub: return "mgda-ub";
    }
    return "unknown";
}

TaskWeights TaskWeights::equal(std::size_t tasks) {
    TaskWeights w;
    w.k.assign(tasks, 1.0f);
    w.strategy = Strategy::equal;
    return w;
}

Tensor combine_losses(Graph& graph, std::span<const Tensor> losses, const TaskWeights& weights) {
    if (losses.size() != weights.k.size()) {
        fail(ErrorCode::invalid_argument, "combine_losses: " + std::to_string(losses.size()) + " losses but " +
                                              std::to_string(weights.k.size()) + " weights");
    }
    for (std::size_t t = 0; t < losses.size(); ++t) {
        if (!std::isfinite(losses[t].item())) {
            fail(ErrorCode::training_diverged, "loss of task " + std::to_string(t) + " is not finite");
        }
        if (!(weights.k[t] >= 0.0f) || !std::isfinite(weights.k[t])) {
            fail(ErrorCode::invalid_argument, "combine_losses: invalid weight " + std::to_string(weights.k[t]));
        }
    }
    return weighted_sum(graph, losses, weights.k);
}

LossBundle make_loss_bundle(Graph& graph, std::vector<Tensor> losses, const TaskWeights& weights) {
    LossBundle bundle;
    bundle.combined = combine_losses(graph, losses, weights);
    bundle.losses = std::move(losses);
    return bundle;
}

MinNormResult min_norm_2task(std::span<const float> g1, std::span<const float> g2) {
    if (g1.size() != g2.size()) {
        fail(ErrorCode::invalid_argument, "min_norm_2task: gradient lengths differ (" + std::to_string(g1.size()) +
                                              " vs " + std::to_string(g2.size()) + ")");
    }
    double diff_sq = 0.0, num = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        const double d = static_cast<double>(g1[i]) - static_cast<double>(g2[i]);
        diff_sq += d * d;
        num -= d * static_cast<double>(g2[i]);
    }
    MinNormResult r;
    r.gamma = diff_sq < 1e-12 ? 0.5 : std::clamp(num / diff_sq, 0.0, 1.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        const double v = r.gamma * g1[i] + (1.0 - r.gamma) * g2[i];
        norm += v * v;
    }
    r.min_norm_sq = norm;
    return r;
}

std::vector<float> flatten_grads(std::span<const Tensor> tensors) {
    std::size_t total = 0;
    for (const auto& t : tensors) total += t.numel();
    std::vector<float> out;
    out.reserve(total);
    for (const auto& t : tensors) {
        if (t.has_grad()) {
            out.insert(out.end(), t.grad().begin(), t.grad().end());
        } else {
            out.insert(out.end(), t.numel(), 0.0f);
        }
    }
    return out;
}

TaskWeights mgda_weights(Graph& graph, const MtlModel& model, const Tensor& loss_height,
                         const Tensor& loss_semantics) {
    const auto shared = model.shared_parameters();
    std::vector<float> g[2];
    const Tensor* losses[2] = {&loss_height, &loss_semantics};
    for (int t = 0; t < 2; ++t) {
        if (!task_backward(graph, model, *losses[t])) {
            zero_parameter_grads(model);
            return mgda_fallback(Strategy::mgda, 0, "non-finite task loss");
        }
        g[t] = flatten_grads(shared);
    }
    zero_parameter_grads(model);
    if (!all_finite(g[0]) || !all_finite(g[1])) {
        return mgda_fallback(Strategy::mgda, g[0].size(), "non-finite shared gradient");
    }
    return weights_from_gamma(Strategy::mgda, min_norm_2task(g[0], g[1]), g[0].size());
}

TaskWeights mgda_ub_weights(Graph& graph, const MtlModel& model, const Tensor& loss_height,
                            const Tensor& loss_semantics, const Tensor& last_shared) {
    if (!last_shared.defined() || !last_shared.requires_grad()) {
        fail(ErrorCode::invalid_argument, "mgda_ub_weights: last shared activation is not on the graph");
    }
    std::vector<float> g[2];
    const Tensor* losses[2] = {&loss_height, &loss_semantics};
    Tensor representation = last_shared;
    for (int t = 0; t < 2; ++t) {
        representation.zero_grad();
        if (!task_backward(graph, model, *losses[t])) {
            zero_parameter_grads(model);
            return mgda_fallback(Strategy::mgda_ub, 0, "non-finite task loss");
        }
        // Intermediate gradients are reset per sweep, so this is d L_t / d z.
        const auto grad = last_shared.grad();
        g[t].assign(grad.begin(), grad.end());
        if (g[t].size() != last_shared.numel()) g[t].assign(last_shared.numel(), 0.0f);
    }
    zero_parameter_grads(model);
    if (!all_finite(g[0]) || !all_finite(g[1])) {
        return mgda_fallback(Strategy::mgda_ub, g[0].size(), "non-finite representation gradient");
    }
    return weights_from_gamma(Strategy::mgda_ub, min_norm_2task(g[0], g[1]), g[0].size());
}

GradNormState::GradNormState(std::size_t tasks, GradNormOptions options)
    : options_(options), weights_(tasks, 1.0) {
    if (tasks == 0) fail(ErrorCode::invalid_argument, "GradNorm needs at least one task");
    if (!(options_.alpha >= 0.0)) fail(ErrorCode::config, "gradnorm_alpha must be >= 0");
    if (!(options_.lr > 0.0)) fail(ErrorCode::config, "gradnorm_lr must be > 0");
}

TaskWeights GradNormState::update(std::span<const double> losses, std::span<const double> grad_norms) {
    const std::size_t T = weights_.size();
    if (losses.size() != T || grad_norms.size() != T) {
        fail(ErrorCode::invalid_argument, "GradNorm update expects " + std::to_string(T) + " losses and norms");
    }
    auto as_weights = [&] {
        TaskWeights w;
        w.strategy = Strategy::gradnorm;
        for (double v : weights_) w.k.push_back(static_cast<float>(v));
        return w;
    };

    const bool finite = std::all_of(losses.begin(), losses.end(), [](double v) { return std::isfinite(v); }) &&
                        std::all_of(grad_norms.begin(), grad_norms.end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
        log_warning("gradnorm: non-finite loss or gradient norm; keeping previous weights");
        return as_weights();
    }
    if (!initialized()) {
        for (double l : losses) initial_losses_.push_back(std::max(l, 1e-8));
    }

    std::vector<double> G(T), ratio(T);
    for (std::size_t t = 0; t < T; ++t) {
        G[t] = weights_[t] * grad_norms[t];
        ratio[t] = losses[t] / initial_losses_[t];
    }
    const double G_mean = std::accumulate(G.begin(), G.end(), 0.0) / static_cast<double>(T);
    const double ratio_mean = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double r = ratio_mean > 0.0 ? ratio[t] / ratio_mean : 1.0;
        const double target = G_mean * std::pow(r, options_.alpha);
        const double diff = G[t] - target;
        // d|G_t - target_t| / dw_t with G_t = w_t |grad_W L_t| and target held fixed.
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        weights_[t] -= options_.lr * sign * grad_norms[t];
    }
    renormalize();
    return as_weights();
}

void GradNormState::renormalize() {
    const double T = static_cast<double>(weights_.size());
    const double floor = options_.floor;
    for (auto& w : weights_) w = std::max(w, floor);
    // Scale to sum T; weights that would fall under the floor are pinned there.
    std::vector<bool> pinned(weights_.size(), false);
    for (std::size_t round = 0; round <= weights_.size(); ++round) {
        double free_sum = 0.0, pinned_sum = 0.0;
        for (std::size_t t = 0; t < weights_.size(); ++t) (pinned[t] ? pinned_sum : free_sum) += weights_[t];
        if (free_sum <= 0.0) break;
        const double scale = (T - pinned_sum) / free_sum;
        bool changed = false;
        for (std::size_t t = 0; t < weights_.size(); ++t) {
            if (pinned[t]) continue;
            weights_[t] *= scale;
            if (weights_[t] < floor) {
                weights_[t] = floor;
                pinned[t] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
}

TaskWeights gradnorm_update(GradNormState& state, Graph& graph, const MtlModel& model, const Tensor& loss_height,
                            const Tensor& loss_semantics) {
    const Tensor& W = model.last_shared_weight();
    const Tensor* losses[2] = {&loss_height, &loss_semantics};
    double norms[2];
    double values[2];
    for (int t = 0; t < 2; ++t) {
        values[t] = losses[t]->item();
        if (task_backward(graph, model, *losses[t])) {
            norms[t] = W.has_grad() ? l2_norm(W.grad()) : 0.0;
        } else {
            norms[t] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    zero_parameter_grads(model);
    return state.update(values, norms);
}

}  // namespace aeromtl
