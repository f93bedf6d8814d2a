#include <gtest/gtest.h>

#include <cmath>

#include "aeromtl/balancing.hpp"
#include "aeromtl/errors.hpp"
#include "aeromtl/log.hpp"
#include "aeromtl/ops.hpp"
#include "gradcheck.hpp"

using namespace aeromtl;

namespace {

double norm_sq_at(double gamma, std::span<const float> g1, std::span<const float> g2) {
    double n = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        const double v = gamma * g1[i] + (1.0 - gamma) * g2[i];
        n += v * v;
    }
    return n;
}

// Exhaustive oracle over gamma in {0, 0.001, ..., 1}.
std::pair<double, double> grid_min(std::span<const float> g1, std::span<const float> g2) {
    double best_g = 0.0, best = norm_sq_at(0.0, g1, g2);
    for (int i = 1; i <= 1000; ++i) {
        const double g = i / 1000.0, v = norm_sq_at(g, g1, g2);
        if (v < best) {
            best = v;
            best_g = g;
        }
    }
    return {best_g, best};
}

struct SilenceLog {
    SilenceLog() : previous(set_log_sink([this](LogLevel, std::string_view m) { messages.emplace_back(m); })) {}
    ~SilenceLog() { set_log_sink(previous); }
    std::vector<std::string> messages;
    LogSink previous;
};

ModelConfig tiny() {
    ModelConfig c;
    c.encoder_depth = 2;
    c.base_channels = 4;
    c.dropout_p = 0.0f;
    c.seed = 3;
    return c;
}

struct Losses {
    Tensor height, semantics, last_shared;
};

Losses compute_losses(Graph& g, const MtlModel& m, std::uint64_t seed) {
    Rng rng = derive_rng(seed, 0);
    Tensor x = check::random_tensor(Shape{1, 3, 8, 8}, rng, 0, 1);
    Tensor target = check::random_tensor(Shape{1, 1, 8, 8}, rng, 0, 5);
    LabelBatch labels{1, 8, 8, std::vector<std::int32_t>(64)};
    for (auto& v : labels.values) v = static_cast<std::int32_t>(uniform_index(rng, 6));
    auto r = m.forward(g, x, ForwardMode::eval, rng);
    return {l1_loss(g, r.height, target, Tensor::full(Shape{1, 1, 8, 8}, 1.0f)),
            softmax_cross_entropy(g, r.logits, labels), r.last_shared};
}

}  // namespace

TEST(CombineLosses, Examples) {
    Graph g;
    const Tensor a[2] = {Tensor::scalar(2), Tensor::scalar(3)};
    EXPECT_EQ(combine_losses(g, a, TaskWeights::equal()).item(), 5.0f);
    const Tensor b[2] = {Tensor::scalar(4), Tensor::scalar(1)};
    TaskWeights w;
    w.k = {0.5f, 2.0f};
    EXPECT_EQ(combine_losses(g, b, w).item(), 4.0f);
    const Tensor bad[2] = {Tensor::scalar(NAN), Tensor::scalar(1)};
    try {
        combine_losses(g, bad, TaskWeights::equal());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::training_diverged);
    }
    const Tensor one[1] = {Tensor::scalar(1)};
    EXPECT_THROW(combine_losses(g, one, TaskWeights::equal()), Error);
}

TEST(CombineLosses, BundleMatchesWeightedSum) {
    Rng rng = derive_rng(4, 0);
    for (int t = 0; t < 50; ++t) {
        Graph g;
        const float l1 = static_cast<float>(uniform01(rng) * 5), l2 = static_cast<float>(uniform01(rng) * 5);
        TaskWeights w;
        w.k = {static_cast<float>(uniform01(rng) * 2), static_cast<float>(uniform01(rng) * 2)};
        auto bundle = make_loss_bundle(g, {Tensor::scalar(l1), Tensor::scalar(l2)}, w);
        EXPECT_NEAR(bundle.combined.item(), static_cast<double>(w.k[0]) * l1 + static_cast<double>(w.k[1]) * l2, 1e-6);
    }
}

TEST(MinNorm, Examples) {
    const std::vector<float> v = {0.3f, -1.2f, 2.0f};
    auto r = min_norm_2task(v, v);
    EXPECT_EQ(r.gamma, 0.5);
    EXPECT_NEAR(r.min_norm_sq, 0.09 + 1.44 + 4.0, 1e-6);

    const std::vector<float> e1 = {1, 0}, e2 = {0, 1};
    r = min_norm_2task(e1, e2);
    auto [gg, gv] = grid_min(e1, e2);
    EXPECT_NEAR(r.gamma, gg, 1e-3);
    EXPECT_NEAR(r.min_norm_sq, gv, 1e-9);
    EXPECT_EQ(r.gamma, 0.5);

    const std::vector<float> a = {2, 0}, b = {-1, 0};
    r = min_norm_2task(a, b);
    EXPECT_NEAR(r.gamma, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.min_norm_sq, 0.0, 1e-12);
    std::tie(gg, gv) = grid_min(a, b);
    EXPECT_NEAR(r.gamma, gg, 1e-3);

    EXPECT_THROW(min_norm_2task(e1, std::vector<float>{1, 2, 3}), Error);
}

TEST(MinNorm, BeatsEveryGridPointAndSatisfiesKkt) {
    Rng rng = derive_rng(5, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t dim = 2 + uniform_index(rng, 63);
        std::vector<float> g1(dim), g2(dim);
        const float shift = static_cast<float>(uniform01(rng) * 2 - 1);
        for (std::size_t i = 0; i < dim; ++i) {
            g1[i] = static_cast<float>(uniform01(rng) * 2 - 1);
            g2[i] = static_cast<float>(uniform01(rng) * 2 - 1) + shift;
        }
        const auto r = min_norm_2task(g1, g2);
        ASSERT_GE(r.gamma, 0.0);
        ASSERT_LE(r.gamma, 1.0);
        const double own = norm_sq_at(r.gamma, g1, g2);
        for (int i = 0; i <= 1000; ++i) ASSERT_LE(own, norm_sq_at(i / 1000.0, g1, g2) + 1e-9);
        double d1 = 0.0, d2 = 0.0, dd = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = r.gamma * g1[i] + (1.0 - r.gamma) * g2[i];
            d1 += d * g1[i];
            d2 += d * g2[i];
            dd += d * d;
        }
        ASSERT_GE(d1, dd - 1e-6);
        ASSERT_GE(d2, dd - 1e-6);
    }
}

TEST(Mgda, IdenticalLossesGiveHalf) {
    MtlModel m = build_model(tiny());
    Graph g;
    auto l = compute_losses(g, m, 1);
    auto w = mgda_weights(g, m, l.height, l.height);
    EXPECT_EQ(*w.gamma, 0.5);
    EXPECT_EQ(w.k[0] + w.k[1], 1.0f);
    auto ub = mgda_ub_weights(g, m, l.semantics, l.semantics, l.last_shared);
    EXPECT_EQ(*ub.gamma, 0.5);
}

TEST(Mgda, ConstantSecondTaskGivesZeroGamma) {
    SilenceLog quiet;
    MtlModel m = build_model(tiny());
    Graph g;
    auto l = compute_losses(g, m, 2);
    // g2 = 0: gamma* = clamp(-g1.0 / |g1|^2) = 0, so k = (0, 1).
    auto w = mgda_weights(g, m, l.height, Tensor::scalar(1.5f));
    EXPECT_EQ(*w.gamma, 0.0);
    EXPECT_EQ(w.k[0], 0.0f);
    EXPECT_EQ(w.k[1], 1.0f);
    EXPECT_FALSE(quiet.messages.empty());
}

TEST(Mgda, WeightsAreConvexAndGradientsLeftZeroed) {
    MtlModel m = build_model(tiny());
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        Graph g;
        auto l = compute_losses(g, m, seed);
        for (const auto& w : {mgda_weights(g, m, l.height, l.semantics),
                              mgda_ub_weights(g, m, l.height, l.semantics, l.last_shared)}) {
            ASSERT_TRUE(w.gamma);
            EXPECT_GE(*w.gamma, 0.0);
            EXPECT_LE(*w.gamma, 1.0);
            EXPECT_FLOAT_EQ(w.k[0] + w.k[1], 1.0f);
        }
        for (const auto& p : m.parameters())
            for (float v : p.grad()) ASSERT_EQ(v, 0.0f);
    }
}

TEST(Mgda, MatchesIndependentGradients) {
    MtlModel m = build_model(tiny());
    // Oracle: per-task shared gradients from fresh graphs.
    auto shared_grad = [&](int task) {
        auto params = m.parameters();
        zero_grads(params);
        Graph g;
        auto l = compute_losses(g, m, 21);
        g.backward(task == 0 ? l.height : l.semantics);
        return flatten_grads(m.shared_parameters());
    };
    const auto g1 = shared_grad(0), g2 = shared_grad(1);
    const auto expected = min_norm_2task(g1, g2);
    Graph g;
    auto l = compute_losses(g, m, 21);
    auto w = mgda_weights(g, m, l.height, l.semantics);
    EXPECT_EQ(w.gradient_elements, m.parameter_count(ParamGroup::shared));
    EXPECT_NEAR(*w.gamma, expected.gamma, 1e-9);
}

TEST(MgdaUb, GradientLengthIsRepresentationSize) {
    MtlModel m = build_model(tiny());
    Graph g;
    auto l = compute_losses(g, m, 3);
    auto w = mgda_ub_weights(g, m, l.height, l.semantics, l.last_shared);
    EXPECT_EQ(w.gradient_elements, l.last_shared.numel());
    EXPECT_LT(w.gradient_elements, m.parameter_count(ParamGroup::shared));
}

TEST(GradNorm, SymmetricInputsLeaveWeightsAtOne) {
    GradNormState s;
    const double losses[2] = {2.0, 2.0}, norms[2] = {0.7, 0.7};
    for (int i = 0; i < 5; ++i) {
        auto w = s.update(losses, norms);
        EXPECT_EQ(w.k[0], 1.0f);
        EXPECT_EQ(w.k[1], 1.0f);
    }
}

TEST(GradNorm, FasterTaskLosesWeight) {
    GradNormState s;
    const double init[2] = {1.0, 1.0}, norms[2] = {0.5, 0.5};
    s.update(init, norms);
    const double now[2] = {0.5, 1.0};  // task 1 ratio halves
    auto w = s.update(now, norms);
    EXPECT_LT(w.k[0], 1.0f);
    EXPECT_GT(w.k[1], 1.0f);
    EXPECT_NEAR(s.weights()[0] + s.weights()[1], 2.0, 1e-6);
}

TEST(GradNorm, PositivityAndNormalizationUnderStress) {
    Rng rng = derive_rng(6, 0);
    GradNormState s(2, GradNormOptions{1.5, 0.5, 1e-4});
    for (int i = 0; i < 500; ++i) {
        const double losses[2] = {uniform01(rng) * 3 + 1e-3, uniform01(rng) * 0.01 + 1e-6};
        const double norms[2] = {uniform01(rng) * 10, uniform01(rng)};
        s.update(losses, norms);
        ASSERT_GE(s.weights()[0], 1e-4);
        ASSERT_GE(s.weights()[1], 1e-4);
        ASSERT_NEAR(s.weights()[0] + s.weights()[1], 2.0, 1e-6);
    }
}

TEST(GradNorm, NonFiniteInputKeepsWeights) {
    SilenceLog quiet;
    GradNormState s;
    const double a[2] = {1.0, 1.0}, n[2] = {1.0, 2.0};
    s.update(a, n);
    const std::vector<double> before(s.weights().begin(), s.weights().end());
    const double bad[2] = {NAN, 1.0};
    s.update(a, bad);
    EXPECT_EQ(std::vector<double>(s.weights().begin(), s.weights().end()), before);
}

TEST(GradNorm, ModelUpdateUsesLastSharedWeight) {
    MtlModel m = build_model(tiny());
    GradNormState s;
    Graph g;
    auto l = compute_losses(g, m, 4);
    auto w = gradnorm_update(s, g, m, l.height, l.semantics);
    EXPECT_EQ(w.strategy, Strategy::gradnorm);
    EXPECT_NEAR(w.k[0] + w.k[1], 2.0f, 1e-6);
    EXPECT_NEAR(s.initial_losses()[0], l.height.item(), 1e-6);
}

TEST(Strategy, ParseNames) {
    EXPECT_EQ(parse_strategy("mgda-ub"), Strategy::mgda_ub);
    EXPECT_EQ(to_string(Strategy::gradnorm), "gradnorm");
    try {
        parse_strategy("uncertainty");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::config);
    }
}
