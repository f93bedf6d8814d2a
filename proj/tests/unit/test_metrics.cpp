#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "aeromtl/errors.hpp"
#include "aeromtl/metrics.hpp"
#include "aeromtl/random.hpp"

using namespace aeromtl;

namespace {

Raster map_of(std::initializer_list<float> values, RasterKind kind = RasterKind::height) {
    Raster r(kind, values.size(), 1, 1);
    std::copy(values.begin(), values.end(), r.values().begin());
    return r;
}

// Direct evaluation from the counts, written independently of the class.
struct Direct {
    double oa, aa, kappa;
};

Direct direct(const std::vector<std::vector<double>>& m) {
    const std::size_t C = m.size();
    double n = 0, trace = 0, pe = 0, recall_sum = 0;
    int present = 0;
    for (std::size_t i = 0; i < C; ++i) {
        trace += m[i][i];
        double row = 0, col = 0;
        for (std::size_t j = 0; j < C; ++j) {
            n += m[i][j];
            row += m[i][j];
            col += m[j][i];
        }
        pe += row * col;
        if (row > 0) {
            recall_sum += m[i][i] / row;
            ++present;
        }
    }
    pe /= n * n;
    const double oa = trace / n;
    return {oa, recall_sum / present, (oa - pe) / (1 - pe)};
}

std::optional<ErrorCode> code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace

TEST(Regression, Examples) {
    auto r = regression_metrics(map_of({0, 2}), map_of({1, 1}));
    EXPECT_EQ(r.mae, 1.0);
    EXPECT_EQ(r.mse, 1.0);
    EXPECT_EQ(r.rmse, 1.0);
    EXPECT_EQ(r.count, 2u);
    r = regression_metrics(map_of({0, 3}), map_of({0, 0}));
    EXPECT_EQ(r.mae, 1.5);
    EXPECT_EQ(r.mse, 4.5);
    EXPECT_NEAR(r.rmse, 2.1213203435596424, 1e-12);
    r = regression_metrics(map_of({4, 5, 6}), map_of({4, 5, 6}));
    EXPECT_EQ(r.mae + r.mse + r.rmse, 0.0);
}

TEST(Regression, MaskAndErrors) {
    Raster pred = map_of({0, 100, 2}), gt = map_of({1, 0, 1});
    pred.invalidate(0, 1);
    const auto r = regression_metrics(pred, gt);
    EXPECT_EQ(r.count, 2u);
    EXPECT_EQ(r.mae, 1.0);
    Raster empty = map_of({1});
    empty.invalidate(0, 0);
    EXPECT_EQ(code_of([&] { regression_metrics(empty, map_of({1})); }), ErrorCode::empty_evaluation);
    EXPECT_EQ(code_of([&] { regression_metrics(map_of({1, 2}), map_of({1})); }), ErrorCode::shape);
}

TEST(Regression, RmseSquaredIsMseAndBoundsMae) {
    Rng rng = derive_rng(1, 0);
    for (int t = 0; t < 200; ++t) {
        Raster a(RasterKind::height, 17, 3, 1), b(RasterKind::height, 17, 3, 1);
        for (auto& v : a.values()) v = static_cast<float>(uniform01(rng) * 40 - 5);
        for (auto& v : b.values()) v = static_cast<float>(uniform01(rng) * 40 - 5);
        const auto r = regression_metrics(a, b);
        ASSERT_NEAR(r.rmse * r.rmse, r.mse, 1e-5 * r.mse);
        ASSERT_LE(r.mae, r.rmse + 1e-12);
    }
}

TEST(Confusion, Examples) {
    ConfusionMatrix perfect(2);
    const std::vector<std::int32_t> labels = {0, 1, 1, 0, 1, 0, 0, 1, 1, 1};
    perfect.accumulate(labels, labels, 10);
    EXPECT_EQ(perfect.total(), 10u);
    EXPECT_EQ(perfect.oa(), 1.0);
    EXPECT_EQ(perfect.aa(), 1.0);
    EXPECT_EQ(perfect.kappa(), 1.0);

    ConfusionMatrix skewed(2);
    skewed.at(0, 0) = 5;
    skewed.at(1, 0) = 5;
    EXPECT_EQ(skewed.oa(), 0.5);
    EXPECT_EQ(skewed.aa(), 0.5);
    EXPECT_EQ(skewed.kappa(), 0.0);
    EXPECT_EQ(skewed.recall(1), 0.0);
}

TEST(Confusion, DegenerateKappaAndAbsentClasses) {
    ConfusionMatrix one(3);
    one.at(1, 1) = 4;  // p_e = 1 with p_o = 1
    EXPECT_EQ(one.kappa(), 1.0);
    EXPECT_EQ(one.aa(), 1.0);
    EXPECT_FALSE(one.recall(0).has_value());
    ConfusionMatrix wrong(3);
    wrong.at(0, 0) = 0;
    wrong.at(2, 2) = 0;
    wrong.at(1, 1) = 2;
    EXPECT_EQ(wrong.kappa(), 1.0);
    ConfusionMatrix miss(2);
    miss.at(0, 0) = 3;
    miss.at(0, 1) = 1;
    EXPECT_DOUBLE_EQ(miss.aa(), 0.75);
}

TEST(Confusion, IgnoreAndErrors) {
    ConfusionMatrix cm(3);
    const std::vector<std::int32_t> gt = {0, 255, 2, 1}, pred = {0, 2, 1, 1};
    cm.accumulate(pred, gt, 2);
    EXPECT_EQ(cm.total(), 3u);
    EXPECT_EQ(cm.at(2, 1), 1u);
    ConfusionMatrix all_ignored(3);
    const std::vector<std::int32_t> ig = {255, 255};
    all_ignored.accumulate(ig, ig, 2);
    EXPECT_EQ(code_of([&] { all_ignored.oa(); }), ErrorCode::empty_evaluation);
    EXPECT_EQ(code_of([&] { all_ignored.kappa(); }), ErrorCode::empty_evaluation);

    const std::vector<std::int32_t> bad = {0, 1, 0, 7};
    try {
        cm.accumulate(bad, gt, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::data);
        EXPECT_NE(std::string(e.what()).find("x=1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("y=1"), std::string::npos) << e.what();
    }
}

TEST(Confusion, RasterAccumulateRespectsMasks) {
    Raster pred = map_of({0, 1, 1, 2}, RasterKind::labels), gt = map_of({0, 1, 0, 2}, RasterKind::labels);
    pred.invalidate(0, 2);
    ConfusionMatrix cm(3);
    cm.accumulate(pred, gt);
    EXPECT_EQ(cm.total(), 3u);
    EXPECT_EQ(cm.oa(), 1.0);
}

TEST(Confusion, RandomMatricesMatchDirectFormulas) {
    Rng rng = derive_rng(2, 0);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t C = 2 + uniform_index(rng, 7);
        ConfusionMatrix cm(C);
        std::vector<std::vector<double>> m(C, std::vector<double>(C));
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = 0; j < C; ++j) {
                const auto v = uniform_index(rng, 4) == 0 ? 0 : uniform_index(rng, 1000);
                cm.at(i, j) = v;
                m[i][j] = static_cast<double>(v);
            }
        if (cm.total() == 0 || cm.kappa() == 1.0) continue;
        const Direct d = direct(m);
        ASSERT_NEAR(cm.oa(), d.oa, 1e-9);
        ASSERT_NEAR(cm.aa(), d.aa, 1e-9);
        ASSERT_NEAR(cm.kappa(), d.kappa, 1e-9);
    }
}

TEST(Confusion, PermutationInvariance) {
    Rng rng = derive_rng(3, 0);
    const std::size_t C = 5, N = 500;
    std::vector<std::int32_t> gt(N), pred(N);
    for (std::size_t i = 0; i < N; ++i) {
        gt[i] = static_cast<std::int32_t>(uniform_index(rng, C));
        pred[i] = uniform_index(rng, 3) == 0 ? static_cast<std::int32_t>(uniform_index(rng, C)) : gt[i];
    }
    const std::vector<std::int32_t> perm = {3, 0, 4, 1, 2};
    std::vector<std::int32_t> gt2(N), pred2(N);
    for (std::size_t i = 0; i < N; ++i) {
        gt2[i] = perm[static_cast<std::size_t>(gt[i])];
        pred2[i] = perm[static_cast<std::size_t>(pred[i])];
    }
    ConfusionMatrix a(C), b(C);
    a.accumulate(pred, gt, 25);
    b.accumulate(pred2, gt2, 25);
    EXPECT_NEAR(a.oa(), b.oa(), 1e-12);
    EXPECT_NEAR(a.aa(), b.aa(), 1e-12);
    EXPECT_NEAR(a.kappa(), b.kappa(), 1e-12);
}

TEST(Confusion, AccumulationIsLinear) {
    Rng rng = derive_rng(4, 0);
    std::vector<std::int32_t> gt(300), pred(300);
    for (auto& v : gt) v = static_cast<std::int32_t>(uniform_index(rng, 4));
    for (auto& v : pred) v = static_cast<std::int32_t>(uniform_index(rng, 4));
    gt[7] = kIgnoreIndex;
    ConfusionMatrix whole(4), first(4), second(4);
    whole.accumulate(pred, gt, 10);
    first.accumulate(std::span(pred).first(120), std::span(gt).first(120), 10);
    second.accumulate(std::span(pred).subspan(120), std::span(gt).subspan(120), 10);
    const std::uint64_t before = first.total();
    first += second;
    EXPECT_GE(first.total(), before);
    EXPECT_EQ(first, whole);
    EXPECT_EQ(whole.total(), 299u);
}

TEST(Report, KeyValueLines) {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 3;
    cm.at(1, 1) = 1;
    RegressionReport r{0.5, 0.25, 0.5, 4};
    const std::string text = format_report(r, &cm);
    for (const char* key : {"mae=", "mse=", "rmse=", "oa=", "aa=", "kappa=", "recall_0=", "recall_1="})
        EXPECT_NE(text.find(key), std::string::npos) << key;
    EXPECT_EQ(format_report(std::nullopt, &cm).find("mae="), std::string::npos);
}
