#include <gtest/gtest.h>

#include "dumb/core/random.hpp"
#include "dumb/models/metrics.hpp"

using namespace dumb;

TEST(Metrics, OneOfEach) {
    // TP at 0, FP at 1, FN at 2, TN at 3
    const std::vector<int> pred{0, 0, 1, 1}, truth{0, 1, 0, 1};
    const Metrics m = f1_score(pred, truth, 0);
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fp, 1u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_EQ(m.tn, 1u);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
}

TEST(Metrics, PerfectPredictions) {
    const std::vector<int> y{0, 1, 1, 0, 1};
    EXPECT_DOUBLE_EQ(f1_score(y, y, 0).f1, 1.0);
    EXPECT_DOUBLE_EQ(f1_score(y, y, 1).f1, 1.0);
}

TEST(Metrics, NoPositivePredictionsGivesZero) {
    const std::vector<int> pred{1, 1, 1}, truth{0, 1, 0};
    const Metrics m = f1_score(pred, truth, 0);
    EXPECT_DOUBLE_EQ(m.precision, 0.0);
    EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(Metrics, AgreesWithConfusionOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(60);
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.index(2));
            truth[i] = static_cast<int>(rng.index(2));
        }
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += pred[i] == 0 && truth[i] == 0;
            fp += pred[i] == 0 && truth[i] == 1;
            fn += pred[i] == 1 && truth[i] == 0;
        }
        const double expected = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
        EXPECT_NEAR(f1_score(pred, truth, 0).f1, expected, 1e-12);
    }
}

TEST(Metrics, Errors) {
    const std::vector<int> a{0, 1}, b{0};
    EXPECT_THROW(f1_score(a, b, 0), Error);
    try {
        f1_score(std::vector<int>{}, std::vector<int>{}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "empty-eval");
    }
}
