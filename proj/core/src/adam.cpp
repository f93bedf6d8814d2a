#include "aeromtl/adam.hpp"

#include <cmath>
#include <string>

#include "aeromtl/errors.hpp"

namespace aeromtl {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions options) : options_(options) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.numel(), 0.0f);
        v_.emplace_back(p.numel(), 0.0f);
    }
}

void AdamState::step(std::span<Tensor> params) {
    if (params.size() != m_.size()) {
        fail(ErrorCode::invalid_argument, "adam: state tracks " + std::to_string(m_.size()) + " parameters, got " +
                                              std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].numel() != m_[i].size()) {
            fail(ErrorCode::shape, "adam: parameter " + std::to_string(i) + " changed shape to " +
                                       shape_to_string(params[i].shape()));
        }
        for (float g : params[i].grad()) {
            if (!std::isfinite(g)) {
                fail(ErrorCode::training_diverged, "adam: non-finite gradient in parameter " + std::to_string(i));
            }
        }
    }

    ++t_;
    const auto& o = options_;
    const double t = static_cast<double>(t_);
    const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(o.beta1), t));
    const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(o.beta2), t));
    const float step_size = o.lr / bc1;
    const float sqrt_bc2 = std::sqrt(bc2);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto grad = params[i].grad();
        if (grad.empty()) continue;
        auto w = params[i].data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const float g = grad[j];
            m[j] = o.beta1 * m[j] + (1.0f - o.beta1) * g;
            v[j] = o.beta2 * v[j] + (1.0f - o.beta2) * g * g;
            w[j] -= step_size * m[j] / (std::sqrt(v[j]) / sqrt_bc2 + o.eps);
        }
    }
}

}  // namespace aeromtl
