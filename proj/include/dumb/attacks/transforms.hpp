#ifndef DUMB_ATTACKS_TRANSFORMS_HPP
#define DUMB_ATTACKS_TRANSFORMS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dumb/core/random.hpp"
#include "dumb/diffcore/tensor.hpp"

namespace dumb {

using Image = Tensor<float>;

// Model-free image transformations. All take and return H x W x C in [0,1].

/// Mean over a (2r+1)^2 window with edge clamping.
inline Image box_blur(const Image& x, std::size_t radius) {
    if (radius == 0) return x;
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
    const auto r = static_cast<std::ptrdiff_t>(radius);
    const auto clampi = [](std::ptrdiff_t v, std::size_t n) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
    };
    const double area = static_cast<double>((2 * radius + 1) * (2 * radius + 1));
    Image out(x.shape);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx)
            for (std::size_t c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
                    for (std::ptrdiff_t dx = -r; dx <= r; ++dx)
                        acc += x[(clampi(static_cast<std::ptrdiff_t>(y) + dy, h) * w +
                                  clampi(static_cast<std::ptrdiff_t>(xx) + dx, w)) *
                                     ch +
                                 c];
                out[(y * w + xx) * ch + c] = static_cast<float>(acc / area);
            }
    return out;
}

/// Additive N(0, sigma^2) noise per pixel value, clamped.
inline Image gaussian_noise(const Image& x, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw Error("config-error", "sigma must be >= 0");
    if (sigma == 0.0) return x;
    Rng rng(seed);
    Image out = x;
    for (float& v : out.data) v = std::clamp(v + static_cast<float>(rng.normal(0.0, sigma)), 0.0f, 1.0f);
    return out;
}

/// ITU-R 601 luma replicated to all three channels.
inline Image grayscale(const Image& x) {
    if (x.dim(2) != 3) throw Error("shape-error", "grayscale expects 3 channels");
    Image out = x;
    for (std::size_t i = 0; i < x.size(); i += 3) {
        const float l = 0.299f * x[i] + 0.587f * x[i + 1] + 0.114f * x[i + 2];
        out[i] = out[i + 1] = out[i + 2] = std::clamp(l, 0.0f, 1.0f);
    }
    return out;
}

inline Image invert(const Image& x) {
    Image out = x;
    for (float& v : out.data) v = 1.0f - v;
    return out;
}

/// Zero a size x size square whose centre is drawn uniformly from the
/// central half of the image (the square is shifted to stay inside).
inline Image random_black_box(const Image& x, std::size_t size, std::uint64_t seed) {
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
    if (size > std::min(h, w)) throw Error("config-error", "box larger than the image");
    if (size == 0) return x;
    Rng rng(seed);
    const auto place = [&](std::size_t n) {
        const std::size_t centre = n / 4 + rng.index(std::max<std::size_t>(n / 2, 1));
        const std::size_t start = centre >= size / 2 ? centre - size / 2 : 0;
        return std::min(start, n - size);
    };
    const std::size_t top = place(h), left = place(w);
    Image out = x;
    for (std::size_t y = top; y < top + size; ++y)
        for (std::size_t xx = left; xx < left + size; ++xx)
            for (std::size_t c = 0; c < ch; ++c) out[(y * w + xx) * ch + c] = 0.0f;
    return out;
}

/// round(amount * H * W) distinct pixel positions: the first half (rounded
/// up) set to white, the rest to black, across all channels.
inline Image salt_pepper(const Image& x, double amount, std::uint64_t seed) {
    if (amount < 0.0 || amount > 1.0) throw Error("config-error", "amount must lie in [0,1]");
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
    const auto count = static_cast<std::size_t>(std::lround(amount * static_cast<double>(h * w)));
    if (count == 0) return x;
    std::vector<std::size_t> positions(h * w);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    Rng rng(seed);
    // partial Fisher-Yates: the first `count` entries become the sample
    for (std::size_t i = 0; i < count; ++i) std::swap(positions[i], positions[i + rng.index(positions.size() - i)]);
    Image out = x;
    const std::size_t salt = (count + 1) / 2;
    for (std::size_t i = 0; i < count; ++i) {
        const float v = i < salt ? 1.0f : 0.0f;
        for (std::size_t c = 0; c < ch; ++c) out[positions[i] * ch + c] = v;
    }
    return out;
}

} // namespace dumb

#endif
