#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "dumb/perceptual/ssim.hpp"
#include "support.hpp"

using namespace dumb;
using namespace dumb::fixtures;

namespace {

Image noisy(const Image& x, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image y = x;
    for (float& v : y.data) v = std::clamp(v + static_cast<float>(rng.normal(0, sigma)), 0.0f, 1.0f);
    return y;
}

} // namespace

TEST(Ssim, IdenticalImagesScoreOne) {
    const Image x = random_image(16, 16, 3, 1);
    EXPECT_NEAR(ssim(x, x), 1.0, 1e-9);
}

TEST(Ssim, ConstantImagesClosedForm) {
    // zero variance leaves only the luminance term (2ab + C1) / (a^2 + b^2 + C1)
    const double a = 0.2, b = 0.7, c1 = 1e-4;
    const double expected = (2 * a * b + c1) / (a * a + b * b + c1);
    EXPECT_NEAR(ssim(Image({12, 12, 3}, 0.2f), Image({12, 12, 3}, 0.7f)), expected, 1e-6);
}

TEST(Ssim, MatchesDirectFormula) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Image x = random_image(14, 15, 3, s);
        const Image y = noisy(x, 0.1 * static_cast<double>(s % 5), s);
        EXPECT_NEAR(ssim(x, y), oracle::direct_ssim(x, y), 1e-6);
    }
}

TEST(Ssim, SymmetricAndBounded) {
    const Image x = random_image(16, 16, 3, 1), y = random_image(16, 16, 3, 2);
    EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-12);
    EXPECT_LT(ssim(x, y), 0.5);
    EXPECT_GE(ssim(x, y), -1.0);
}

TEST(Ssim, NoiseLowersScore) {
    const Image x = random_image(32, 32, 3, 4);
    EXPECT_GT(ssim(x, noisy(x, 0.02, 1)), ssim(x, noisy(x, 0.2, 1)));
}

TEST(Ssim, ErrorsAndMean) {
    EXPECT_THROW(ssim(Image({8, 8, 3}), Image({8, 8, 3})), Error);
    EXPECT_THROW(ssim(Image({12, 12, 3}), Image({12, 13, 3})), Error);
    const Image x = random_image(12, 12, 3, 1);
    EXPECT_NEAR(mean_ssim({x, x}, {x, x}), 1.0, 1e-9);
    EXPECT_THROW(mean_ssim({}, {}), Error);
    EXPECT_THROW(mean_ssim({x}, {}), Error);
}
