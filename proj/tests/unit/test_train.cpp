#include <gtest/gtest.h>

#include "support.hpp"

using namespace dumb;
using namespace dumb::fixtures;

namespace {

DatasetSplit separable_split(std::uint64_t seed) {
    DatasetSplit s = split(separable_images(60, 8, seed), {0.7, 0.1, 0.2}, seed);
    s.provenance = {"toy", "A", seed};
    return s;
}

TrainingConfig quick_config() {
    TrainingConfig c;
    c.epochs = 4;
    c.batch_size = 8;
    c.learning_rate = 0.05;
    c.seed = 3;
    return c;
}

} // namespace

TEST(Train, LearnsSeparableClasses) {
    const ModelRecord r = train(tiny_cnn(), separable_split(1), {"toy", "A", "balanced", "tiny", 3}, quick_config());
    EXPECT_GE(r.baseline.f1, 0.95);
    EXPECT_EQ(r.validation_f1.size(), 4u);
    EXPECT_GE(r.best_epoch, 1u);
    EXPECT_LE(r.best_epoch, 4u);
    EXPECT_EQ(r.validation_f1[r.best_epoch - 1], *std::max_element(r.validation_f1.begin(), r.validation_f1.end()));
}

TEST(Train, DeterministicForFixedSeed) {
    const auto s = separable_split(2);
    const ModelRecord a = train(tiny_cnn(), s, {"toy", "A", "balanced", "tiny", 3}, quick_config());
    const ModelRecord b = train(tiny_cnn(), s, {"toy", "A", "balanced", "tiny", 3}, quick_config());
    EXPECT_EQ(encode_checkpoint(a.network.to_named_tensors()), encode_checkpoint(b.network.to_named_tensors()));
    TrainingConfig other = quick_config();
    other.seed = 4;
    const ModelRecord c = train(tiny_cnn(), s, {"toy", "A", "balanced", "tiny", 4}, other);
    EXPECT_NE(encode_checkpoint(a.network.to_named_tensors()), encode_checkpoint(c.network.to_named_tensors()));
}

TEST(Train, BaselineIsMinorityClassF1OnTestSplit) {
    const auto s = separable_split(5);
    const ModelRecord r = train(tiny_cnn(), s, {"toy", "A", "balanced", "tiny", 3}, quick_config());
    const auto pred = predict_labels(r.network, s.test);
    std::vector<int> truth;
    for (const auto& it : s.test) truth.push_back(it.label);
    EXPECT_DOUBLE_EQ(r.baseline.f1, f1_score(pred, truth, kPositiveClass).f1);
}

TEST(Train, ConfigErrors) {
    TrainingConfig c = quick_config();
    c.epochs = 0;
    EXPECT_THROW(train(tiny_cnn(), separable_split(1), {}, c), Error);
    DatasetSplit empty;
    EXPECT_THROW(train(tiny_cnn(), empty, {}, quick_config()), Error);
}

TEST(Train, DivergenceIsReported) {
    TrainingConfig c = quick_config();
    c.learning_rate = 1e30;
    try {
        train(tiny_cnn(), separable_split(1), {"toy", "A", "balanced", "tiny", 3}, c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "training-diverged");
    }
}

TEST(Train, ProvenanceId) {
    EXPECT_EQ((ModelProvenance{"easy", "A", "weak", "arch-S", 0}.id()), "easy-A-weak-arch-S");
}
