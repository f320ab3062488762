#ifndef DUMB_ATTACKS_GRADIENT_ATTACKS_HPP
#define DUMB_ATTACKS_GRADIENT_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dumb/core/random.hpp"
#include "dumb/diffcore/gradient.hpp"

namespace dumb {

using Image = Tensor<float>;

namespace attack_detail {

inline float sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

/// One signed ascent step: clamp to [0,1], then project into the max-norm
/// ball of radius eps around the original.
inline void signed_step(Image& current, const Image& original, const Image& direction, float step, float eps) {
    for (std::size_t i = 0; i < current.size(); ++i) {
        const float moved = clamp01(current[i] + step * sign(direction[i]));
        current[i] = std::min(std::max(moved, original[i] - eps), original[i] + eps);
    }
}

inline void check_iterative(std::size_t steps, float step_size) {
    if (steps < 1) throw Error("config-error", "steps must be >= 1");
    if (!(step_size > 0.0f)) throw Error("config-error", "step_size must be > 0");
}

inline void check_eps(float eps) {
    if (!(eps >= 0.0f)) throw Error("config-error", "epsilon must be >= 0");
}

} // namespace attack_detail

/// x* = clamp(x + eps * sign(grad_x J(theta, x, y)), 0, 1)
template <TapeModel<float> M>
Image fgsm(const M& model, const Image& x, int y, float eps) {
    attack_detail::check_eps(eps);
    const Image g = grad_wrt_input<float>(model, x, y);
    Image out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = attack_detail::clamp01(x[i] + eps * attack_detail::sign(g[i]));
    return out;
}

/// Iterative FGSM with per-step projection onto the eps-ball.
template <TapeModel<float> M>
Image bim(const M& model, const Image& x, int y, float eps, std::size_t steps, float step_size) {
    attack_detail::check_eps(eps);
    attack_detail::check_iterative(steps, step_size);
    Image cur = x;
    for (std::size_t s = 0; s < steps; ++s) {
        const Image g = grad_wrt_input<float>(model, cur, y);
        attack_detail::signed_step(cur, x, g, step_size, eps);
    }
    return cur;
}

/// BIM from an optional uniform random start inside the eps-ball.
template <TapeModel<float> M>
Image pgd(const M& model, const Image& x, int y, float eps, std::size_t steps, float step_size, bool random_start,
          std::uint64_t seed) {
    attack_detail::check_eps(eps);
    attack_detail::check_iterative(steps, step_size);
    Image cur = x;
    if (random_start) {
        Rng rng(seed);
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] = attack_detail::clamp01(x[i] + static_cast<float>(rng.uniform(-eps, eps)));
    }
    for (std::size_t s = 0; s < steps; ++s) {
        const Image g = grad_wrt_input<float>(model, cur, y);
        attack_detail::signed_step(cur, x, g, step_size, eps);
    }
    return cur;
}

/// Start at x + (eps/2) * sign(gaussian noise), then BIM iterations in the
/// eps-ball of x.
template <TapeModel<float> M>
Image rfgsm(const M& model, const Image& x, int y, float eps, std::size_t steps, float step_size, std::uint64_t seed) {
    attack_detail::check_eps(eps);
    attack_detail::check_iterative(steps, step_size);
    Image cur = x;
    Rng rng(seed);
    for (std::size_t i = 0; i < cur.size(); ++i) {
        const auto noise = static_cast<float>(rng.normal());
        cur[i] = attack_detail::clamp01(x[i] + 0.5f * eps * attack_detail::sign(noise));
    }
    for (std::size_t s = 0; s < steps; ++s) {
        const Image g = grad_wrt_input<float>(model, cur, y);
        attack_detail::signed_step(cur, x, g, step_size, eps);
    }
    return cur;
}

/// Normalised odd-sized Gaussian kernel, row-major size x size.
inline std::vector<float> gaussian_kernel(std::size_t size, double sigma) {
    if (size % 2 == 0) throw Error("config-error", "kernel size must be odd");
    std::vector<double> k(size * size);
    const double mid = static_cast<double>(size / 2);
    double total = 0.0;
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double dy = static_cast<double>(i) - mid, dx = static_cast<double>(j) - mid;
            k[i * size + j] = sigma > 0.0 ? std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) : (dx == 0 && dy == 0);
            total += k[i * size + j];
        }
    std::vector<float> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / total);
    return out;
}

/// Per-channel same-size convolution of an H x W x C field with zero padding.
inline Image smooth_gradient(const Image& g, const std::vector<float>& kernel, std::size_t size) {
    if (size == 1) {
        Image out = g;
        for (float& v : out.data) v *= kernel[0];
        return out;
    }
    const std::size_t h = g.dim(0), w = g.dim(1), ch = g.dim(2);
    const auto half = static_cast<std::ptrdiff_t>(size / 2);
    Image out(g.shape);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                float acc = 0.0f;
                for (std::size_t i = 0; i < size; ++i) {
                    const auto yy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(i) - half;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t j = 0; j < size; ++j) {
                        const auto xx = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(j) - half;
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                        acc += kernel[i * size + j] * g[(static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * ch + c];
                    }
                }
                out[(y * w + x) * ch + c] = acc;
            }
    return out;
}

/// Translation-invariant momentum iterative FGSM: each gradient is smoothed
/// by a Gaussian kernel, L1-normalised, and accumulated with momentum before
/// the signed step.
template <TapeModel<float> M>
Image tifgsm(const M& model, const Image& x, int y, float eps, std::size_t steps, float step_size, std::size_t kernel_size,
             double kernel_sigma, float momentum) {
    attack_detail::check_eps(eps);
    attack_detail::check_iterative(steps, step_size);
    const std::vector<float> kernel = gaussian_kernel(kernel_size, kernel_sigma);
    Image cur = x;
    Image accumulated(x.shape);
    for (std::size_t s = 0; s < steps; ++s) {
        const Image g = smooth_gradient(grad_wrt_input<float>(model, cur, y), kernel, kernel_size);
        float l1 = 0.0f;
        for (float v : g.data) l1 += std::abs(v);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const float normalized = l1 > 0.0f ? g[i] / l1 : g[i];
            accumulated[i] = momentum * accumulated[i] + normalized;
        }
        attack_detail::signed_step(cur, x, accumulated, step_size, eps);
    }
    return cur;
}

} // namespace dumb

#endif
