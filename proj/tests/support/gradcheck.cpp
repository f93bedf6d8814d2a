#include "gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace aeromtl::check {

Tensor random_tensor(const Shape& shape, Rng& rng, float lo, float hi, bool requires_grad) {
    Tensor t(shape, requires_grad);
    for (float& v : t.data()) v = lo + static_cast<float>(uniform01(rng)) * (hi - lo);
    return t;
}

GradCheckResult gradcheck(const std::function<Tensor(Graph&)>& loss_fn, std::vector<Tensor> wrt,
                          std::size_t coords, Rng& rng, double h, double abs_tol, double rel_tol) {
    for (auto& t : wrt) t.zero_grad();
    {
        Graph graph;
        graph.backward(loss_fn(graph));
    }
    auto eval = [&] {
        Graph graph(false);
        return static_cast<double>(loss_fn(graph).item());
    };

    GradCheckResult r;
    for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
        Tensor& t = wrt[ti];
        for (std::size_t k = 0; k < coords; ++k) {
            const std::size_t i = uniform_index(rng, t.numel());
            const float saved = t.data()[i];
            t.data()[i] = static_cast<float>(saved + h);
            const double up = eval();
            t.data()[i] = static_cast<float>(saved - h);
            const double down = eval();
            t.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = t.has_grad() ? t.grad()[i] : 0.0;
            const double abs_err = std::abs(analytic - numeric);
            const double rel_err = abs_err / std::max(std::abs(numeric), 1e-12);
            ++r.checked;
            if (abs_err > std::max(abs_tol, rel_tol * std::abs(numeric))) {
                ++r.failures;
                if (r.worst.empty() || abs_err > r.max_abs_error) {
                    std::ostringstream s;
                    s << "tensor " << ti << " index " << i << ": analytic " << analytic << " numeric " << numeric;
                    r.worst = s.str();
                }
            }
            r.max_abs_error = std::max(r.max_abs_error, abs_err);
            r.max_rel_error = std::max(r.max_rel_error, std::min(rel_err, abs_err));
        }
    }
    return r;
}

std::vector<double> naive_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                                 int padding) {
    const long N = static_cast<long>(input.dim(0)), C = static_cast<long>(input.dim(1));
    const long H = static_cast<long>(input.dim(2)), W = static_cast<long>(input.dim(3));
    const long O = static_cast<long>(weight.dim(0)), KH = static_cast<long>(weight.dim(2));
    const long KW = static_cast<long>(weight.dim(3));
    const long OH = (H + 2 * padding - KH) / stride + 1, OW = (W + 2 * padding - KW) / stride + 1;
    const auto x = input.data();
    const auto w = weight.data();
    const auto b = bias.data();
    std::vector<double> out(static_cast<std::size_t>(N * O * OH * OW));
    for (long n = 0; n < N; ++n)
        for (long o = 0; o < O; ++o)
            for (long oy = 0; oy < OH; ++oy)
                for (long ox = 0; ox < OW; ++ox) {
                    double acc = b[static_cast<std::size_t>(o)];
                    for (long c = 0; c < C; ++c)
                        for (long ky = 0; ky < KH; ++ky)
                            for (long kx = 0; kx < KW; ++kx) {
                                const long iy = oy * stride - padding + ky, ix = ox * stride - padding + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += static_cast<double>(x[static_cast<std::size_t>(((n * C + c) * H + iy) * W + ix)]) *
                                       w[static_cast<std::size_t>(((o * C + c) * KH + ky) * KW + kx)];
                            }
                    out[static_cast<std::size_t>(((n * O + o) * OH + oy) * OW + ox)] = acc;
                }
    return out;
}

}  // namespace aeromtl::check
