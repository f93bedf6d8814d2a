#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aeromtl/random.hpp"
#include "aeromtl/tensor.hpp"

namespace aeromtl {

inline constexpr std::int32_t kIgnoreIndex = 255;

/// Integer class labels laid out N x H x W.
struct LabelBatch {
    std::size_t n = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::int32_t> values;
};

// Differentiable operations. Each records itself on `graph` when any input
// requires a gradient and the graph is recording.

/// Cross-correlation. input [N,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout].
Tensor conv2d(Graph& graph, const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding);

/// Nearest-neighbour x2 upsampling followed by a stride-1 conv2d with
/// "same" padding. Only `factor == 2` is supported.
Tensor upconv2d(Graph& graph, const Tensor& input, const Tensor& weight, const Tensor& bias, int factor = 2);

Tensor upsample_nearest2x(Graph& graph, const Tensor& input);
Tensor leaky_relu(Graph& graph, const Tensor& x, float slope);
Tensor max_pool2(Graph& graph, const Tensor& x);
Tensor concat_channels(Graph& graph, const Tensor& a, const Tensor& b);

/// Inverted dropout. With `active == false` returns `x` itself.
Tensor dropout(Graph& graph, const Tensor& x, float p, bool active, Rng& rng);

Tensor add(Graph& graph, const Tensor& a, const Tensor& b);
Tensor mul(Graph& graph, const Tensor& a, const Tensor& b);
Tensor sum(Graph& graph, const Tensor& x);

/// sum_i weights[i] * terms[i] over scalar terms.
Tensor weighted_sum(Graph& graph, std::span<const Tensor> terms, std::span<const float> weights);

/// sum(|pred - target| * mask) / sum(mask). Gradient flows into `pred` only.
Tensor l1_loss(Graph& graph, const Tensor& pred, const Tensor& target, const Tensor& mask);

/// Mean over non-ignored pixels of -log softmax(logits)[label].
Tensor softmax_cross_entropy(Graph& graph, const Tensor& logits, const LabelBatch& labels,
                             std::int32_t ignore_index = kIgnoreIndex);

}  // namespace aeromtl
