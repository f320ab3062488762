#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "dumb/core/random.hpp"
#include "dumb/harness/ks.hpp"

using namespace dumb;

TEST(Ks, IdenticalSamples) {
    const std::vector<double> a{0.1, 0.4, 0.4, 0.9};
    const auto r = ks_test(a, a);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(Ks, DisjointSupports) {
    const auto r = ks_test(std::vector<double>(10, 0.0), std::vector<double>(10, 1.0));
    EXPECT_EQ(r.statistic, 1.0);
    EXPECT_LT(r.p_value, 0.05);
}

TEST(Ks, MatchesBruteForceOracle) {
    Rng rng(77);
    for (int f = 0; f < 10; ++f) {
        std::vector<double> a(30), b(30);
        for (auto& v : a) v = std::round(rng.uniform() * 20) / 20;  // ties on purpose
        for (auto& v : b) v = std::round((rng.uniform() * 0.8 + 0.05 * f) * 20) / 20;
        const auto r = ks_test(a, b);
        EXPECT_EQ(r.statistic, oracle::ecdf_statistic(a, b));
        EXPECT_NEAR(r.p_value, oracle::ks_p_value(a, b), 1e-6);
    }
}

TEST(Ks, UnequalSizes) {
    const std::vector<double> a{0.1, 0.2, 0.3}, b{0.15, 0.25, 0.35, 0.45, 0.55};
    const auto r = ks_test(a, b);
    EXPECT_EQ(r.statistic, oracle::ecdf_statistic(a, b));
    EXPECT_NEAR(r.p_value, oracle::ks_p_value(a, b), 1e-6);
}

TEST(Ks, SurvivalIsContinuousAtBranch) {
    EXPECT_NEAR(kolmogorov_survival(1.18 - 1e-9), kolmogorov_survival(1.18 + 1e-9), 1e-7);
    for (double l : {0.2, 0.5, 0.8, 1.0, 1.5, 2.0}) EXPECT_NEAR(kolmogorov_survival(l), oracle::kolmogorov_series(l), 1e-9);
    EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Ks, EmptySample) {
    try {
        ks_test({}, {1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "eval-error");
    }
}
