#include <gtest/gtest.h>

#include "aeromtl/adam.hpp"
#include "aeromtl/errors.hpp"
#include "aeromtl/ops.hpp"
#include "gradcheck.hpp"

using namespace aeromtl;

TEST(Tensor, ShapeAndDataLengthAgree) {
    Tensor t(Shape{2, 3, 4});
    EXPECT_EQ(t.numel(), 24u);
    EXPECT_EQ(t.data().size(), shape_numel(t.shape()));
    EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<float>(3)), Error);
    EXPECT_THROW(Tensor(Shape{2, 0}), Error);
}

TEST(Tensor, CopiesAliasClonesDoNot) {
    Tensor a = Tensor::full(Shape{3}, 1.0f);
    Tensor b = a;
    Tensor c = a.clone();
    b.data()[0] = 5.0f;
    EXPECT_EQ(a.data()[0], 5.0f);
    EXPECT_EQ(c.data()[0], 1.0f);
    EXPECT_TRUE(a.same_storage(b));
    EXPECT_FALSE(a.same_storage(c));
}

TEST(Backward, SumGivesOnes) {
    Tensor x = Tensor::full(Shape{2, 3, 2}, 0.7f, true);
    Graph g;
    g.backward(sum(g, x));
    ASSERT_TRUE(x.has_grad());
    EXPECT_EQ(x.grad().size(), x.numel());
    for (float v : x.grad()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, SquareAtThreeGivesSix) {
    Tensor x = Tensor::full(Shape{1}, 3.0f, true);
    Graph g;
    g.backward(sum(g, mul(g, x, x)));
    EXPECT_FLOAT_EQ(x.grad()[0], 6.0f);
}

TEST(Backward, RepeatedCallsAccumulateUntilZeroed) {
    Tensor x = Tensor::full(Shape{4}, 1.0f, true);
    for (int i = 0; i < 3; ++i) {
        Graph g;
        g.backward(sum(g, x));
    }
    EXPECT_EQ(x.grad()[2], 3.0f);
    std::vector<Tensor> params{x};
    zero_grads(params);
    EXPECT_EQ(x.grad()[2], 0.0f);
}

TEST(Backward, NonScalarLossRejected) {
    Tensor x = Tensor::full(Shape{2}, 1.0f, true);
    Graph g;
    Tensor y = mul(g, x, x);
    try {
        g.backward(y);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(Backward, VisitsEachOperationOnceInReverseOrder) {
    Rng rng = derive_rng(1, 0);
    Tensor x = check::random_tensor(Shape{3}, rng, -1, 1, true);
    Graph g;
    Tensor a = mul(g, x, x);
    Tensor b = add(g, a, x);
    Tensor c = add(g, b, a);  // a is consumed twice
    Tensor loss = sum(g, c);
    g.backward(loss);
    EXPECT_EQ(g.last_visit_count(), g.size());
    // d/dx (2x^2 + x) = 4x + 1
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x.grad()[i], 4.0f * x.data()[i] + 1.0f, 1e-6);
}

TEST(Backward, ChainRuleLinearity) {
    Rng rng = derive_rng(2, 0);
    Tensor x = check::random_tensor(Shape{1, 2, 6, 6}, rng, -1, 1, true);
    Tensor w = check::random_tensor(Shape{3, 2, 3, 3}, rng, -0.5f, 0.5f, true);
    Tensor b = check::random_tensor(Shape{3}, rng, -0.1f, 0.1f, true);
    Tensor r1 = check::random_tensor(Shape{1, 3, 6, 6}, rng);
    Tensor r2 = check::random_tensor(Shape{1, 3, 6, 6}, rng);
    auto losses = [&](Graph& g) {
        Tensor y = leaky_relu(g, conv2d(g, x, w, b, 1, 1), 0.2f);
        return std::pair{sum(g, mul(g, y, r1)), sum(g, mul(g, y, r2))};
    };
    const float a = 0.7f, c = -1.3f;
    std::vector<Tensor> params{x, w, b};
    auto grads_of = [&](int which) {
        zero_grads(params);
        Graph g;
        auto [l1, l2] = losses(g);
        if (which == 0) {
            g.backward(l1);
        } else if (which == 1) {
            g.backward(l2);
        } else {
            const Tensor terms[2] = {l1, l2};
            const float k[2] = {a, c};
            g.backward(weighted_sum(g, terms, k));
        }
        std::vector<std::vector<float>> out;
        for (auto& p : params) out.emplace_back(p.grad().begin(), p.grad().end());
        return out;
    };
    const auto g1 = grads_of(0), g2 = grads_of(1), gc = grads_of(2);
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < g1[p].size(); ++i) {
            EXPECT_NEAR(gc[p][i], a * g1[p][i] + c * g2[p][i], 1e-5) << "param " << p << " index " << i;
        }
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    Tensor p = Tensor::full(Shape{4}, 0.3f, true);
    p.zero_grad();
    std::vector<Tensor> params{p};
    AdamState state(params);
    state.step(params);
    for (float v : p.data()) EXPECT_EQ(v, 0.3f);
    EXPECT_EQ(state.step_count(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    // One bias-corrected step: m_hat = g, v_hat = g^2, so |delta| = lr * |g| / (|g| + eps).
    for (float g : {0.5f, -2.0f, 1e-3f}) {
        Tensor p = Tensor::full(Shape{1}, 1.0f, true);
        p.zero_grad();
        p.grad()[0] = g;
        std::vector<Tensor> params{p};
        AdamState state(params, AdamOptions{2e-4f});
        state.step(params);
        const double expected = 1.0 - 2e-4 * g / (std::abs(g) + 1e-8);
        EXPECT_NEAR(p.data()[0], expected, 1e-7) << "g=" << g;
    }
}

TEST(Adam, StepCounterAndMomentShapes) {
    Tensor a(Shape{2, 3}, true), b(Shape{5}, true);
    std::vector<Tensor> params{a, b};
    zero_grads(params);
    AdamState state(params);
    for (int i = 1; i <= 3; ++i) {
        state.step(params);
        EXPECT_EQ(state.step_count(), static_cast<std::uint64_t>(i));
    }
    EXPECT_EQ(state.first_moment(0).size(), 6u);
    EXPECT_EQ(state.second_moment(1).size(), 5u);
}

TEST(Adam, NonFiniteGradientIsDivergence) {
    Tensor p = Tensor::full(Shape{2}, 1.0f, true);
    p.zero_grad();
    p.grad()[1] = std::numeric_limits<float>::quiet_NaN();
    std::vector<Tensor> params{p};
    AdamState state(params);
    try {
        state.step(params);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::training_diverged);
    }
    EXPECT_EQ(p.data()[0], 1.0f);
    EXPECT_EQ(state.step_count(), 0u);
}

TEST(Adam, IdenticalRunsAreBitwiseIdentical) {
    auto run = [] {
        Rng rng = derive_rng(9, 0);
        Tensor p = check::random_tensor(Shape{16}, rng, -1, 1, true);
        std::vector<Tensor> params{p};
        AdamState state(params);
        for (int i = 0; i < 5; ++i) {
            zero_grads(params);
            Graph g;
            g.backward(sum(g, mul(g, p, p)));
            state.step(params);
        }
        return std::vector<float>(p.data().begin(), p.data().end());
    };
    EXPECT_EQ(run(), run());
}
