#include "aeromtl/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

struct ConvGeometry {
    std::size_t n, cin, h, w;
    std::size_t cout, kh, kw;
    std::size_t out_h, out_w;
    int stride, padding;

    std::size_t patch() const { return cin * kh * kw; }
    std::size_t out_pixels() const { return out_h * out_w; }
    bool is_pointwise() const { return kh == 1 && kw == 1 && stride == 1 && padding == 0; }
};

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        fail(ErrorCode::shape, std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                                   shape_to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        fail(ErrorCode::shape, std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                   shape_to_string(b.shape()));
    }
}

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
    require_rank(input, 4, "conv2d", "input");
    require_rank(weight, 4, "conv2d", "weight");
    require_rank(bias, 1, "conv2d", "bias");
    ConvGeometry g{};
    g.n = input.dim(0);
    g.cin = input.dim(1);
    g.h = input.dim(2);
    g.w = input.dim(3);
    g.cout = weight.dim(0);
    g.kh = weight.dim(2);
    g.kw = weight.dim(3);
    g.stride = stride;
    g.padding = padding;
    if (weight.dim(1) != g.cin) {
        fail(ErrorCode::shape, "conv2d: input " + shape_to_string(input.shape()) + " has " + std::to_string(g.cin) +
                                   " channels but weight " + shape_to_string(weight.shape()) + " expects " +
                                   std::to_string(weight.dim(1)));
    }
    if (bias.dim(0) != g.cout) {
        fail(ErrorCode::shape, "conv2d: bias " + shape_to_string(bias.shape()) + " does not match " +
                                   std::to_string(g.cout) + " output channels");
    }
    if (g.kh % 2 == 0 || g.kw % 2 == 0) {
        fail(ErrorCode::shape, "conv2d: kernel extents must be odd, got " + shape_to_string(weight.shape()));
    }
    if (stride < 1 || padding < 0) {
        fail(ErrorCode::invalid_argument, "conv2d: stride must be >= 1 and padding >= 0");
    }
    const auto span_h = static_cast<long>(g.h) + 2L * padding - static_cast<long>(g.kh);
    const auto span_w = static_cast<long>(g.w) + 2L * padding - static_cast<long>(g.kw);
    if (span_h < 0 || span_w < 0 || span_h % stride != 0 || span_w % stride != 0) {
        fail(ErrorCode::shape, "conv2d: input " + shape_to_string(input.shape()) + " with kernel " +
                                   std::to_string(g.kh) + "x" + std::to_string(g.kw) + ", stride " +
                                   std::to_string(stride) + ", padding " + std::to_string(padding) +
                                   " gives a non-integral output size");
    }
    g.out_h = static_cast<std::size_t>(span_h / stride) + 1;
    g.out_w = static_cast<std::size_t>(span_w / stride) + 1;
    return g;
}

// Output index range [lo, hi) whose input coordinate o*stride - pad + k lies
// inside [0, extent).
std::pair<long, long> valid_range(long out_extent, long extent, long k, long stride, long pad) {
    long lo = 0;
    if (pad - k > 0) lo = (pad - k + stride - 1) / stride;
    long hi = out_extent;
    const long last = extent - 1 + pad - k;
    if (last < 0) return {0, 0};
    hi = std::min(hi, last / stride + 1);
    return {lo, std::max(lo, hi)};
}

void im2col(const float* image, const ConvGeometry& g, float* col) {
    const long P = static_cast<long>(g.out_pixels());
    const long H = static_cast<long>(g.h), W = static_cast<long>(g.w);
    const long OH = static_cast<long>(g.out_h), OW = static_cast<long>(g.out_w);
    const long s = g.stride, pad = g.padding;
    for (std::size_t c = 0; c < g.cin; ++c) {
        const float* plane = image + c * g.h * g.w;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto [y_lo, y_hi] = valid_range(OH, H, static_cast<long>(ky), s, pad);
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto [x_lo, x_hi] = valid_range(OW, W, static_cast<long>(kx), s, pad);
                float* row = col + ((c * g.kh + ky) * g.kw + kx) * P;
                std::fill(row, row + P, 0.0f);
                for (long oy = y_lo; oy < y_hi; ++oy) {
                    const long offset = (oy * s - pad + static_cast<long>(ky)) * W - pad + static_cast<long>(kx);
                    float* dst = row + oy * OW;
                    if (s == 1) {
                        std::copy(plane + offset + x_lo, plane + offset + x_hi, dst + x_lo);
                    } else {
                        for (long ox = x_lo; ox < x_hi; ++ox) dst[ox] = plane[offset + ox * s];
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvGeometry& g, float* image) {
    const long P = static_cast<long>(g.out_pixels());
    const long H = static_cast<long>(g.h), W = static_cast<long>(g.w);
    const long OH = static_cast<long>(g.out_h), OW = static_cast<long>(g.out_w);
    const long s = g.stride, pad = g.padding;
    for (std::size_t c = 0; c < g.cin; ++c) {
        float* plane = image + c * g.h * g.w;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto [y_lo, y_hi] = valid_range(OH, H, static_cast<long>(ky), s, pad);
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto [x_lo, x_hi] = valid_range(OW, W, static_cast<long>(kx), s, pad);
                const float* row = col + ((c * g.kh + ky) * g.kw + kx) * P;
                for (long oy = y_lo; oy < y_hi; ++oy) {
                    const long offset = (oy * s - pad + static_cast<long>(ky)) * W - pad + static_cast<long>(kx);
                    const float* src = row + oy * OW;
                    for (long ox = x_lo; ox < x_hi; ++ox) plane[offset + ox * s] += src[ox];
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(Graph& graph, const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
    const ConvGeometry g = conv_geometry(input, weight, bias, stride, padding);
    Tensor out(Shape{g.n, g.cout, g.out_h, g.out_w});

    const std::size_t K = g.patch(), P = g.out_pixels();
    const std::size_t in_plane = g.cin * g.h * g.w;
    std::vector<float> col(g.is_pointwise() ? 0 : K * P);

    MapConstMat wmat(weight.data().data(), static_cast<long>(g.cout), static_cast<long>(K));
    Eigen::Map<const Eigen::VectorXf> bvec(bias.data().data(), static_cast<long>(g.cout));
    for (std::size_t n = 0; n < g.n; ++n) {
        const float* image = input.data().data() + n * in_plane;
        const float* cols = image;
        if (!g.is_pointwise()) {
            im2col(image, g, col.data());
            cols = col.data();
        }
        MapConstMat cmat(cols, static_cast<long>(K), static_cast<long>(P));
        MapMat omat(out.data().data() + n * g.cout * P, static_cast<long>(g.cout), static_cast<long>(P));
        omat.noalias() = wmat * cmat;
        omat.colwise() += bvec;
    }

    if (graph.should_record({&input, &weight, &bias})) {
        graph.record(out, {input, weight, bias}, [g, input, weight](BackwardContext& ctx) {
            const std::size_t K = g.patch(), P = g.out_pixels();
            const std::size_t in_plane = g.cin * g.h * g.w;
            const auto gout = ctx.output_grad();
            auto g_in = ctx.input_grad(0);
            auto g_w = ctx.input_grad(1);
            auto g_b = ctx.input_grad(2);
            std::vector<float> col(g.is_pointwise() ? 0 : K * P);
            std::vector<float> gcol(g_in.empty() || g.is_pointwise() ? 0 : K * P);
            MapConstMat wmat(weight.data().data(), static_cast<long>(g.cout), static_cast<long>(K));
            for (std::size_t n = 0; n < g.n; ++n) {
                MapConstMat gmat(gout.data() + n * g.cout * P, static_cast<long>(g.cout), static_cast<long>(P));
                if (!g_b.empty()) {
                    // Sequential sum: the order must not depend on buffer alignment.
                    for (std::size_t o = 0; o < g.cout; ++o) {
                        const float* row = gout.data() + (n * g.cout + o) * P;
                        float acc = 0.0f;
                        for (std::size_t p = 0; p < P; ++p) acc += row[p];
                        g_b[o] += acc;
                    }
                }
                if (!g_w.empty()) {
                    const float* image = input.data().data() + n * in_plane;
                    const float* cols = image;
                    if (!g.is_pointwise()) {
                        im2col(image, g, col.data());
                        cols = col.data();
                    }
                    MapConstMat cmat(cols, static_cast<long>(K), static_cast<long>(P));
                    MapMat gw(g_w.data(), static_cast<long>(g.cout), static_cast<long>(K));
                    gw.noalias() += gmat * cmat.transpose();
                }
                if (!g_in.empty()) {
                    float* gimage = g_in.data() + n * in_plane;
                    if (g.is_pointwise()) {
                        MapMat gi(gimage, static_cast<long>(K), static_cast<long>(P));
                        gi.noalias() += wmat.transpose() * gmat;
                    } else {
                        MapMat gc(gcol.data(), static_cast<long>(K), static_cast<long>(P));
                        gc.noalias() = wmat.transpose() * gmat;
                        col2im_add(gcol.data(), g, gimage);
                    }
                }
            }
        });
    }
    return out;
}

Tensor upsample_nearest2x(Graph& graph, const Tensor& input) {
    require_rank(input, 4, "upsample_nearest2x", "input");
    const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    Tensor out(Shape{N, C, 2 * H, 2 * W});
    const auto src = input.data();
    auto dst = out.data();
    for (std::size_t p = 0; p < N * C; ++p) {
        const float* s = src.data() + p * H * W;
        float* d = dst.data() + p * 4 * H * W;
        for (std::size_t y = 0; y < H; ++y) {
            float* row0 = d + (2 * y) * 2 * W;
            float* row1 = row0 + 2 * W;
            for (std::size_t x = 0; x < W; ++x) {
                const float v = s[y * W + x];
                row0[2 * x] = v;
                row0[2 * x + 1] = v;
            }
            std::copy(row0, row0 + 2 * W, row1);
        }
    }
    if (graph.should_record({&input})) {
        graph.record(out, {input}, [N, C, H, W](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto gin = ctx.input_grad(0);
            for (std::size_t p = 0; p < N * C; ++p) {
                const float* g = gout.data() + p * 4 * H * W;
                float* gi = gin.data() + p * H * W;
                for (std::size_t y = 0; y < H; ++y) {
                    const float* row0 = g + (2 * y) * 2 * W;
                    const float* row1 = row0 + 2 * W;
                    for (std::size_t x = 0; x < W; ++x) {
                        gi[y * W + x] += (row0[2 * x] + row0[2 * x + 1]) + (row1[2 * x] + row1[2 * x + 1]);
                    }
                }
            }
        });
    }
    return out;
}

Tensor upconv2d(Graph& graph, const Tensor& input, const Tensor& weight, const Tensor& bias, int factor) {
    if (factor != 2) {
        fail(ErrorCode::unsupported, "upconv2d: only x2 upsampling is supported, got factor " + std::to_string(factor));
    }
    require_rank(weight, 4, "upconv2d", "weight");
    const int pad = static_cast<int>(weight.dim(2) / 2);
    if (weight.dim(2) != weight.dim(3)) {
        fail(ErrorCode::shape, "upconv2d: kernel must be square, got " + shape_to_string(weight.shape()));
    }
    return conv2d(graph, upsample_nearest2x(graph, input), weight, bias, 1, pad);
}

Tensor leaky_relu(Graph& graph, const Tensor& x, float slope) {
    Tensor out(x.shape());
    const auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0f ? src[i] : slope * src[i];
    if (graph.should_record({&x})) {
        graph.record(out, {x}, [x, slope](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto gin = ctx.input_grad(0);
            const auto src = x.data();
            for (std::size_t i = 0; i < src.size(); ++i) gin[i] += src[i] > 0.0f ? gout[i] : slope * gout[i];
        });
    }
    return out;
}

Tensor max_pool2(Graph& graph, const Tensor& x) {
    require_rank(x, 4, "max_pool2", "input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0) {
        fail(ErrorCode::shape, "max_pool2: spatial extents must be even, got " + shape_to_string(x.shape()));
    }
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor out(Shape{N, C, OH, OW});
    std::vector<std::uint32_t> argmax(out.numel());
    const auto src = x.data();
    auto dst = out.data();
    for (std::size_t p = 0; p < N * C; ++p) {
        const std::size_t base = p * H * W;
        for (std::size_t y = 0; y < OH; ++y) {
            for (std::size_t xx = 0; xx < OW; ++xx) {
                std::size_t best = base + (2 * y) * W + 2 * xx;
                const std::size_t candidates[3] = {best + 1, best + W, best + W + 1};
                for (std::size_t c : candidates) {
                    if (src[c] > src[best]) best = c;
                }
                const std::size_t o = p * OH * OW + y * OW + xx;
                dst[o] = src[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    if (graph.should_record({&x})) {
        graph.record(out, {x}, [argmax = std::move(argmax)](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto gin = ctx.input_grad(0);
            for (std::size_t o = 0; o < argmax.size(); ++o) gin[argmax[o]] += gout[o];
        });
    }
    return out;
}

Tensor concat_channels(Graph& graph, const Tensor& a, const Tensor& b) {
    require_rank(a, 4, "concat_channels", "first input");
    require_rank(b, 4, "concat_channels", "second input");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        fail(ErrorCode::shape, "concat_channels: N, H, W must match, got " + shape_to_string(a.shape()) + " and " +
                                   shape_to_string(b.shape()));
    }
    const std::size_t N = a.dim(0), CA = a.dim(1), CB = b.dim(1), HW = a.dim(2) * a.dim(3);
    Tensor out(Shape{N, CA + CB, a.dim(2), a.dim(3)});
    auto dst = out.data();
    for (std::size_t n = 0; n < N; ++n) {
        const auto sa = a.data().subspan(n * CA * HW, CA * HW);
        const auto sb = b.data().subspan(n * CB * HW, CB * HW);
        float* d = dst.data() + n * (CA + CB) * HW;
        std::copy(sa.begin(), sa.end(), d);
        std::copy(sb.begin(), sb.end(), d + CA * HW);
    }
    if (graph.should_record({&a, &b})) {
        graph.record(out, {a, b}, [N, CA, CB, HW](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto ga = ctx.input_grad(0);
            auto gb = ctx.input_grad(1);
            for (std::size_t n = 0; n < N; ++n) {
                const float* g = gout.data() + n * (CA + CB) * HW;
                if (!ga.empty()) {
                    float* d = ga.data() + n * CA * HW;
                    for (std::size_t i = 0; i < CA * HW; ++i) d[i] += g[i];
                }
                if (!gb.empty()) {
                    float* d = gb.data() + n * CB * HW;
                    for (std::size_t i = 0; i < CB * HW; ++i) d[i] += g[CA * HW + i];
                }
            }
        });
    }
    return out;
}

Tensor dropout(Graph& graph, const Tensor& x, float p, bool active, Rng& rng) {
    if (!(p >= 0.0f && p < 1.0f)) {
        fail(ErrorCode::invalid_argument, "dropout: probability must lie in [0, 1), got " + std::to_string(p));
    }
    if (!active || p == 0.0f) return x;

    const float scale = 1.0f / (1.0f - p);
    std::vector<float> factor(x.numel());
    for (auto& f : factor) f = uniform01(rng) < static_cast<double>(p) ? 0.0f : scale;

    Tensor out(x.shape());
    const auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * factor[i];
    if (graph.should_record({&x})) {
        graph.record(out, {x}, [factor = std::move(factor)](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto gin = ctx.input_grad(0);
            for (std::size_t i = 0; i < factor.size(); ++i) gin[i] += gout[i] * factor[i];
        });
    }
    return out;
}

Tensor add(Graph& graph, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a.data()[i] + b.data()[i];
    if (graph.should_record({&a, &b})) {
        graph.record(out, {a, b}, [](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            for (std::size_t k = 0; k < 2; ++k) {
                auto gi = ctx.input_grad(k);
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += gout[i];
            }
        });
    }
    return out;
}

Tensor mul(Graph& graph, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a.data()[i] * b.data()[i];
    if (graph.should_record({&a, &b})) {
        graph.record(out, {a, b}, [a, b](BackwardContext& ctx) {
            const auto gout = ctx.output_grad();
            auto ga = ctx.input_grad(0);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gout[i] * b.data()[i];
            auto gb = ctx.input_grad(1);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gout[i] * a.data()[i];
        });
    }
    return out;
}

Tensor sum(Graph& graph, const Tensor& x) {
    double acc = 0.0;
    for (float v : x.data()) acc += v;
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    if (graph.should_record({&x})) {
        graph.record(out, {x}, [](BackwardContext& ctx) {
            const float g = ctx.output_grad()[0];
            for (auto& v : ctx.input_grad(0)) v += g;
        });
    }
    return out;
}

Tensor weighted_sum(Graph& graph, std::span<const Tensor> terms, std::span<const float> weights) {
    if (terms.size() != weights.size() || terms.empty()) {
        fail(ErrorCode::invalid_argument, "weighted_sum: " + std::to_string(terms.size()) + " terms but " +
                                              std::to_string(weights.size()) + " weights");
    }
    float acc = 0.0f;
    bool any_grad = false;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].numel() != 1) {
            fail(ErrorCode::shape, "weighted_sum: term " + std::to_string(i) + " is not scalar");
        }
        acc += weights[i] * terms[i].item();
        any_grad = any_grad || terms[i].requires_grad();
    }
    Tensor out = Tensor::scalar(acc);
    if (graph.recording() && any_grad) {
        std::vector<float> k(weights.begin(), weights.end());
        graph.record(out, std::vector<Tensor>(terms.begin(), terms.end()), [k](BackwardContext& ctx) {
            const float g = ctx.output_grad()[0];
            for (std::size_t i = 0; i < k.size(); ++i) {
                auto gi = ctx.input_grad(i);
                if (!gi.empty()) gi[0] += k[i] * g;
            }
        });
    }
    return out;
}

Tensor l1_loss(Graph& graph, const Tensor& pred, const Tensor& target, const Tensor& mask) {
    require_same_shape(pred, target, "l1_loss");
    require_same_shape(pred, mask, "l1_loss");
    const auto p = pred.data(), t = target.data(), m = mask.data();
    double count = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (m[i] != 0.0f && m[i] != 1.0f) {
            fail(ErrorCode::invalid_argument, "l1_loss: mask values must be 0 or 1, got " + std::to_string(m[i]));
        }
        if (m[i] == 0.0f) continue;
        count += 1.0;
        acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
    }
    if (count == 0.0) fail(ErrorCode::degenerate_loss, "l1_loss: mask selects no pixels");
    Tensor out = Tensor::scalar(static_cast<float>(acc / count));
    if (graph.should_record({&pred})) {
        const float inv = static_cast<float>(1.0 / count);
        graph.record(out, {pred}, [pred, target, mask, inv](BackwardContext& ctx) {
            const float g = ctx.output_grad()[0] * inv;
            auto gp = ctx.input_grad(0);
            const auto p = pred.data(), t = target.data(), m = mask.data();
            for (std::size_t i = 0; i < gp.size(); ++i) {
                if (m[i] == 0.0f || p[i] == t[i]) continue;
                gp[i] += p[i] > t[i] ? g : -g;
            }
        });
    }
    return out;
}

Tensor softmax_cross_entropy(Graph& graph, const Tensor& logits, const LabelBatch& labels, std::int32_t ignore_index) {
    require_rank(logits, 4, "softmax_cross_entropy", "logits");
    const std::size_t N = logits.dim(0), C = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
    if (labels.n != N || labels.height != H || labels.width != W || labels.values.size() != N * H * W) {
        fail(ErrorCode::shape, "softmax_cross_entropy: labels " + std::to_string(labels.n) + "x" +
                                   std::to_string(labels.height) + "x" + std::to_string(labels.width) +
                                   " do not match logits " + shape_to_string(logits.shape()));
    }
    const std::size_t HW = H * W;
    const auto z = logits.data();
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < HW; ++i) {
            const std::int32_t label = labels.values[n * HW + i];
            if (label == ignore_index) continue;
            if (label < 0 || static_cast<std::size_t>(label) >= C) {
                fail(ErrorCode::invalid_argument, "softmax_cross_entropy: label " + std::to_string(label) +
                                                      " outside [0, " + std::to_string(C) + ")");
            }
            const float* zp = z.data() + n * C * HW + i;
            double zmax = zp[0];
            for (std::size_t c = 1; c < C; ++c) zmax = std::max(zmax, static_cast<double>(zp[c * HW]));
            double denom = 0.0;
            for (std::size_t c = 0; c < C; ++c) denom += std::exp(static_cast<double>(zp[c * HW]) - zmax);
            acc += zmax + std::log(denom) - static_cast<double>(zp[static_cast<std::size_t>(label) * HW]);
            ++count;
        }
    }
    if (count == 0) fail(ErrorCode::degenerate_loss, "softmax_cross_entropy: every pixel is ignored");
    Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(count)));
    if (graph.should_record({&logits})) {
        graph.record(out, {logits}, [logits, labels, ignore_index, count, N, C, HW](BackwardContext& ctx) {
            const double g = static_cast<double>(ctx.output_grad()[0]) / static_cast<double>(count);
            auto gz = ctx.input_grad(0);
            const auto z = logits.data();
            std::vector<double> e(C);
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t i = 0; i < HW; ++i) {
                    const std::int32_t label = labels.values[n * HW + i];
                    if (label == ignore_index) continue;
                    const std::size_t base = n * C * HW + i;
                    double zmax = z[base];
                    for (std::size_t c = 1; c < C; ++c) zmax = std::max(zmax, static_cast<double>(z[base + c * HW]));
                    double denom = 0.0;
                    for (std::size_t c = 0; c < C; ++c) {
                        e[c] = std::exp(static_cast<double>(z[base + c * HW]) - zmax);
                        denom += e[c];
                    }
                    for (std::size_t c = 0; c < C; ++c) {
                        const double target = c == static_cast<std::size_t>(label) ? 1.0 : 0.0;
                        gz[base + c * HW] += static_cast<float>(g * (e[c] / denom - target));
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace aeromtl
