#include <gtest/gtest.h>

#include "dumb/tuning/tune.hpp"
#include "support.hpp"

using namespace dumb;
using namespace dumb::fixtures;

namespace {

constexpr std::size_t kSide = 12;

/// Samples labelled by the model itself, so every clean prediction is correct.
std::vector<LabeledImage> self_labelled(const Model& m, std::size_t n, std::uint64_t seed) {
    std::vector<LabeledImage> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Image x = random_image(kSide, kSide, 3, seed + i);
        out.push_back({x, predict_label(m, x)});
    }
    return out;
}

/// All weights zero: always predicts class 0.
Model constant_model() {
    Model m = random_cnn({kSide, kSide, 3}, 1);
    for (auto& [name, t] : m.parameters())
        for (float& v : t.data) v = 0.0f;
    return m;
}

AttackSpec fgsm_spec() {
    AttackSpec s = make_attack_spec("FGSM");
    s.grid = Grid{0.02, 0.3, 0.04};
    return s;
}

TuningConfig config(double alpha) {
    TuningConfig c;
    c.alpha = alpha;
    c.seed = 5;
    return c;
}

} // namespace

TEST(Tune, GammaIsFeasibleAndGridOptimal) {
    const Model m = random_cnn({kSide, kSide, 3}, 3);
    const auto samples = self_labelled(m, 8, 100);
    for (double alpha : {0.2, 0.4, 0.6, 0.8}) {
        const auto r = tune(fgsm_spec(), {&m}, samples, config(alpha));
        ASSERT_EQ(r.trace.size(), 8u);
        ASSERT_TRUE(r.feasible) << alpha;
        EXPECT_EQ(r.status(), "ok");
        const auto& best = r.trace[r.gamma_index];
        EXPECT_EQ(best.parameter, r.gamma);
        EXPECT_GE(best.mean_ssim, alpha);
        for (std::size_t g = 0; g < r.trace.size(); ++g) {
            if (r.trace[g].mean_ssim < alpha) continue;
            EXPECT_LE(r.trace[g].fooled, best.fooled);
            if (g < r.gamma_index) EXPECT_LT(r.trace[g].fooled, best.fooled);
        }
        EXPECT_EQ(r.adversarials.size(), samples.size());
        EXPECT_DOUBLE_EQ(best.asr, asr(m, [&] {
            std::vector<Image> o;
            for (const auto& s : samples) o.push_back(s.image);
            return o;
        }(), r.adversarials, r.labels));
    }
}

TEST(Tune, InfeasibleGridIsFlagged) {
    const Model m = random_cnn({kSide, kSide, 3}, 3);
    const auto r = tune(fgsm_spec(), {&m}, self_labelled(m, 4, 7), config(1.0));
    EXPECT_FALSE(r.feasible);
    EXPECT_EQ(r.status(), "constraint-infeasible");
    EXPECT_TRUE(std::isnan(r.gamma));
    EXPECT_TRUE(r.adversarials.empty());
    EXPECT_EQ(r.trace.size(), 8u);
}

TEST(Tune, TiesGoToSmallestParameter) {
    const Model m = constant_model();
    std::vector<LabeledImage> samples;
    for (std::size_t i = 0; i < 4; ++i) samples.push_back({random_image(kSide, kSide, 3, i), 0});
    const auto r = tune(fgsm_spec(), {&m}, samples, config(0.01));
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.gamma_index, 0u);
    EXPECT_DOUBLE_EQ(r.gamma, 0.02);
}

TEST(Tune, ParameterFreeTransformIsAlwaysReturned) {
    const Model m = random_cnn({kSide, kSide, 3}, 3);
    const auto r = tune(make_attack_spec("Invert"), {&m}, self_labelled(m, 4, 9), config(1.0));
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Tune, AsrAveragesOverEvaluators) {
    const Model a = random_cnn({kSide, kSide, 3}, 3), b = constant_model();
    std::vector<LabeledImage> samples;
    for (std::size_t i = 0; i < 6; ++i) samples.push_back({random_image(kSide, kSide, 3, 40 + i), 1});
    // b always says 0, so every label-1 sample fools it
    const auto r = tune(make_attack_spec("Invert"), {&a, &b}, samples, config(0.4));
    EXPECT_EQ(r.evaluation_models, 2u);
    std::size_t fooled_a = 0;
    for (const auto& s : samples) fooled_a += predict_label(a, invert(s.image)) != 1;
    EXPECT_DOUBLE_EQ(r.trace[0].asr, static_cast<double>(fooled_a + 6) / 12.0);
}

TEST(Tune, SampleSeedsFollowContent) {
    const Model m = random_cnn({kSide, kSide, 3}, 3);
    const auto samples = self_labelled(m, 6, 20);
    AttackSpec noise = make_attack_spec("GaussianNoise");
    noise.grid = Grid{0.1, 0.2, 0.1};
    const auto full = tune(noise, {&m}, samples, config(0.01));
    const std::vector<LabeledImage> tail(samples.begin() + 3, samples.end());
    const auto part = tune(noise, {&m}, tail, config(0.01));
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(part.trace[g].sample_ssim[i], full.trace[g].sample_ssim[i + 3]);
}

TEST(Tune, ClassTracesRecombine) {
    const Model m = random_cnn({kSide, kSide, 3}, 4);
    const auto samples = self_labelled(m, 10, 60);
    const auto r = tune(fgsm_spec(), {&m}, samples, config(0.4));
    const auto c0 = class_trace(r, 0), c1 = class_trace(r, 1);
    for (std::size_t g = 0; g < r.trace.size(); ++g) {
        ASSERT_EQ(c0[g].samples + c1[g].samples, samples.size());
        const double combined = (c0[g].asr * c0[g].samples + c1[g].asr * c1[g].samples) / samples.size();
        EXPECT_NEAR(combined, r.trace[g].asr, 1e-12);
    }
}

TEST(Tune, PerClassNeedsBothClasses) {
    const Model m = constant_model();
    std::vector<LabeledImage> samples{{random_image(kSide, kSide, 3, 1), 0}, {random_image(kSide, kSide, 3, 2), 0}};
    EXPECT_THROW(tune_per_class(fgsm_spec(), {&m}, samples, config(0.4)), Error);
    samples.push_back({random_image(kSide, kSide, 3, 3), 1});
    const auto both = tune_per_class(fgsm_spec(), {&m}, samples, config(0.4));
    EXPECT_EQ(both[0].labels.size(), 2u);
    EXPECT_EQ(both[1].labels.size(), 1u);
}

TEST(Tune, Errors) {
    const Model m = constant_model();
    const auto samples = self_labelled(m, 2, 1);
    EXPECT_THROW(tune(fgsm_spec(), {}, samples, config(0.4)), Error);
    EXPECT_THROW(tune(fgsm_spec(), {&m}, {}, config(0.4)), Error);
    EXPECT_THROW(tune(fgsm_spec(), {&m}, samples, config(0.0)), Error);
}
