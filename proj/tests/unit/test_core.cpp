#include <gtest/gtest.h>

#include <set>

#include "dumb/core/error.hpp"
#include "dumb/core/random.hpp"

using namespace dumb;

TEST(Error, CarriesCodeAndDetail) {
    const Error e("shape-error", "bad dims");
    EXPECT_EQ(e.code(), "shape-error");
    EXPECT_STREQ(e.what(), "shape-error: bad dims");
}

TEST(Random, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Random, UniformStaysInUnitInterval) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Random, IndexCoversRange) {
    Rng rng(3);
    std::set<std::size_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(rng.index(7));
    EXPECT_EQ(seen.size(), 7u);
    EXPECT_EQ(*seen.rbegin(), 6u);
}

TEST(Random, NormalMomentsRoughlyStandard) {
    Rng rng(9);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        s += v;
        s2 += v * v;
    }
    EXPECT_NEAR(s / n, 0.0, 0.03);
    EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Random, ShuffleIsPermutation) {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    Rng rng(5);
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_NE(v, sorted);
}

TEST(Random, DerivedSeedsDifferByTagAndIndex) {
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
    EXPECT_EQ(derive_seed(7, "tag"), derive_seed(7, "tag"));
}

TEST(Random, Fnv1aKnownVector) {
    // FNV-1a 64 reference values
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
