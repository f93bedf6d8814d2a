#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace aeromtl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct TensorStorage {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;
    bool requires_grad = false;
    bool leaf = true;
    // Backward pass that last wrote `grad` (intermediates only).
    std::uint64_t grad_pass = 0;
};

}  // namespace detail

/// Dense float tensor with shared handle semantics. Copies alias the same
/// storage; use clone() for a deep copy. Image data uses N x C x H x W.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<float> values, bool requires_grad = false);

    static Tensor scalar(float value, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<float> data();
    std::span<const float> data() const;
    float item() const;

    bool requires_grad() const;
    void set_requires_grad(bool value);
    bool is_leaf() const;

    bool has_grad() const;
    std::span<float> grad();
    std::span<const float> grad() const;
    void zero_grad();

    Tensor clone() const;
    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    friend class Graph;
    friend class BackwardContext;

    std::shared_ptr<detail::TensorStorage> impl_;
};

class Graph;

/// Handed to each backward closure: upstream gradient in, input gradients out.
class BackwardContext {
public:
    std::span<const float> output_grad() const;
    /// Accumulation buffer for input `index`; empty when that input does not
    /// require a gradient.
    std::span<float> input_grad(std::size_t index);
    bool wants_grad(std::size_t index) const;

private:
    friend class Graph;
    BackwardContext(Graph& graph, std::size_t node) : graph_(graph), node_(node) {}

    Graph& graph_;
    std::size_t node_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Tape of executed differentiable operations. Operations are appended in
/// execution order, so the tape is always topologically sorted.
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const noexcept { return recording_; }

    /// True when an op over `inputs` must be recorded.
    bool should_record(std::initializer_list<const Tensor*> inputs) const;

    /// Marks `output` as produced by an op over `inputs` and appends it.
    void record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward);

    /// Reverse-mode sweep from a scalar. Leaf gradients accumulate across
    /// calls; intermediate gradients hold d(loss)/d(tensor) of this sweep only.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t last_visit_count() const noexcept { return last_visits_; }
    void clear();

private:
    friend class BackwardContext;

    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    std::span<float> grad_for_write(Tensor& tensor);

    bool recording_;
    std::vector<Node> nodes_;
    std::uint64_t pass_ = 0;
    std::size_t last_visits_ = 0;
};

/// Zeros gradients of every tensor in `params`.
void zero_grads(std::span<Tensor> params);

}  // namespace aeromtl
