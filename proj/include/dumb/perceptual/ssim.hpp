#ifndef DUMB_PERCEPTUAL_SSIM_HPP
#define DUMB_PERCEPTUAL_SSIM_HPP

#include <cmath>
#include <vector>

#include "dumb/diffcore/tensor.hpp"

namespace dumb {

struct SsimConfig {
    std::size_t window = 11;
    double sigma = 1.5;
    double dynamic_range = 1.0;
    double k1 = 0.01, k2 = 0.03;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

    /// Normalised 1-D Gaussian; the 2-D window is its outer product.
    std::vector<double> kernel_1d() const {
        std::vector<double> k(window);
        const double mid = (static_cast<double>(window) - 1.0) / 2.0;
        double s = 0.0;
        for (std::size_t i = 0; i < window; ++i) {
            const double d = static_cast<double>(i) - mid;
            k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
            s += k[i];
        }
        for (double& v : k) v /= s;
        return k;
    }
};

/// Mean SSIM over all valid (unpadded) window positions and channels of two
/// H x W x C images.
inline double ssim(const Tensor<float>& x, const Tensor<float>& y, const SsimConfig& config = {}) {
    require_same_shape(x, y, "ssim");
    if (x.rank() != 3 || x.dim(0) < config.window || x.dim(1) < config.window) {
        throw Error("shape-error", "ssim needs H x W x C images at least " + std::to_string(config.window) +
                                       " pixels wide, got " + shape_string(x.shape));
    }
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2), win = config.window;
    const std::size_t oh = h - win + 1, ow = w - win + 1;
    const std::vector<double> k = config.kernel_1d();
    const double c1 = config.c1(), c2 = config.c2();

    // Five moment maps filtered horizontally, then vertically.
    std::vector<double> rows(5 * h * ow);
    double total = 0.0;
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t o = 0; o < ow; ++o) {
                double m[5] = {0, 0, 0, 0, 0};
                for (std::size_t t = 0; t < win; ++t) {
                    const double a = x[(r * w + o + t) * ch + c], b = y[(r * w + o + t) * ch + c];
                    m[0] += k[t] * a;
                    m[1] += k[t] * b;
                    m[2] += k[t] * a * a;
                    m[3] += k[t] * b * b;
                    m[4] += k[t] * a * b;
                }
                for (int q = 0; q < 5; ++q) rows[(static_cast<std::size_t>(q) * h + r) * ow + o] = m[q];
            }
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t o = 0; o < ow; ++o) {
                double m[5] = {0, 0, 0, 0, 0};
                for (std::size_t t = 0; t < win; ++t)
                    for (int q = 0; q < 5; ++q) m[q] += k[t] * rows[(static_cast<std::size_t>(q) * h + r + t) * ow + o];
                const double mx = m[0], my = m[1];
                const double vx = m[2] - mx * mx, vy = m[3] - my * my, cxy = m[4] - mx * my;
                total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
    }
    return total / static_cast<double>(oh * ow * ch);
}

/// Arithmetic mean of pairwise SSIM.
inline double mean_ssim(const std::vector<Tensor<float>>& originals, const std::vector<Tensor<float>>& perturbed,
                        const SsimConfig& config = {}) {
    if (originals.size() != perturbed.size()) throw Error("eval-error", "mean_ssim list length mismatch");
    if (originals.empty()) throw Error("empty-eval", "mean_ssim of empty lists");
    double s = 0.0;
    for (std::size_t i = 0; i < originals.size(); ++i) s += ssim(originals[i], perturbed[i], config);
    return s / static_cast<double>(originals.size());
}

} // namespace dumb

#endif
