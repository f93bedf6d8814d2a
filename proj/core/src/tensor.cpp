#include "aeromtl/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

// Pass ids are global so intermediates shared between graphs never alias.
std::atomic<std::uint64_t> g_next_pass{1};

void check_shape(const Shape& shape) {
    for (std::size_t extent : shape) {
        if (extent == 0) fail(ErrorCode::shape, "zero extent in shape " + shape_to_string(shape));
    }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) n *= extent;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<detail::TensorStorage>()) {
    check_shape(shape);
    impl_->data.assign(shape_numel(shape), 0.0f);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<float> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorStorage>()) {
    check_shape(shape);
    if (values.size() != shape_numel(shape)) {
        fail(ErrorCode::shape, "value count " + std::to_string(values.size()) + " does not match shape " +
                                   shape_to_string(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(float value, bool requires_grad) { return Tensor(Shape{}, {value}, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= impl_->shape.size()) {
        fail(ErrorCode::shape, "axis " + std::to_string(axis) + " out of range for " + shape_to_string(impl_->shape));
    }
    return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<float> Tensor::data() { return impl_->data; }
std::span<const float> Tensor::data() const { return impl_->data; }

float Tensor::item() const {
    if (numel() != 1) fail(ErrorCode::invalid_argument, "item() on tensor of shape " + shape_to_string(shape()));
    return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool value) { impl_->requires_grad = value; }
bool Tensor::is_leaf() const { return impl_->leaf; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<float> Tensor::grad() { return impl_->grad; }
std::span<const float> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0f); }

Tensor Tensor::clone() const {
    Tensor copy(impl_->shape, impl_->data, impl_->requires_grad);
    copy.impl_->grad = impl_->grad;
    return copy;
}

std::span<const float> BackwardContext::output_grad() const {
    return graph_.nodes_[node_].output.impl_->grad;
}

bool BackwardContext::wants_grad(std::size_t index) const {
    return graph_.nodes_[node_].inputs.at(index).requires_grad();
}

std::span<float> BackwardContext::input_grad(std::size_t index) {
    Tensor& input = graph_.nodes_[node_].inputs.at(index);
    if (!input.requires_grad()) return {};
    return graph_.grad_for_write(input);
}

bool Graph::should_record(std::initializer_list<const Tensor*> inputs) const {
    if (!recording_) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void Graph::record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward) {
    output.impl_->leaf = false;
    output.impl_->requires_grad = true;
    nodes_.push_back(Node{std::move(inputs), output, std::move(backward)});
}

std::span<float> Graph::grad_for_write(Tensor& tensor) {
    auto& s = *tensor.impl_;
    if (s.leaf) {
        if (s.grad.size() != s.data.size()) s.grad.assign(s.data.size(), 0.0f);
    } else if (s.grad_pass != pass_) {
        s.grad.assign(s.data.size(), 0.0f);
        s.grad_pass = pass_;
    }
    return s.grad;
}

void Graph::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        fail(ErrorCode::invalid_argument,
             "backward() needs a scalar loss, got shape " + (loss.defined() ? shape_to_string(loss.shape()) : "<null>"));
    }
    if (!loss.requires_grad()) fail(ErrorCode::invalid_argument, "backward() on a loss that does not require grad");

    pass_ = g_next_pass.fetch_add(1);
    Tensor seed = loss;
    grad_for_write(seed)[0] += 1.0f;

    last_visits_ = 0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const auto& out = *nodes_[i].output.impl_;
        if (out.grad_pass != pass_) continue;
        BackwardContext ctx(*this, i);
        nodes_[i].backward(ctx);
        ++last_visits_;
    }
}

void Graph::clear() {
    nodes_.clear();
    last_visits_ = 0;
}

void zero_grads(std::span<Tensor> params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace aeromtl
