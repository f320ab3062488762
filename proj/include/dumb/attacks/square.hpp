#ifndef DUMB_ATTACKS_SQUARE_HPP
#define DUMB_ATTACKS_SQUARE_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dumb/attacks/gradient_attacks.hpp"

namespace dumb {

/// Probability vector for one image; the only access Square has to the model.
using ScoreOracle = std::function<std::vector<float>(const Image&)>;

struct SquareResult {
    Image adversarial;
    std::size_t queries = 0;
    double margin = 0.0;  // p_y - max_{k != y} p_k of the returned image
};

namespace square_detail {

inline double margin(const std::vector<float>& p, int y) {
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.size(); ++k)
        if (static_cast<int>(k) != y) other = std::max(other, static_cast<double>(p[k]));
    return static_cast<double>(p[static_cast<std::size_t>(y)]) - other;
}

/// Fraction of pixels changed per proposal, halved on a fixed schedule
/// expressed on a 10000-query scale.
inline double p_selection(double p_init, std::size_t iteration, std::size_t budget) {
    const auto it = static_cast<std::size_t>(static_cast<double>(iteration) / static_cast<double>(budget) * 10000.0);
    static const std::size_t thresholds[] = {10, 50, 200, 500, 1000, 2000, 4000, 6000, 8000};
    double p = p_init;
    for (std::size_t t : thresholds)
        if (it > t) p /= 2.0;
    return p;
}

} // namespace square_detail

/// Max-norm Square attack: random search over square patches of +-eps,
/// accepting a proposal only if it lowers the probability margin. Stops once
/// the margin is negative or the query budget is spent. The clean image
/// costs the first query.
inline SquareResult square_attack(const ScoreOracle& oracle, const Image& x, int y, float eps, std::size_t query_budget,
                                  double p_init, std::uint64_t seed) {
    attack_detail::check_eps(eps);
    if (query_budget < 1) throw Error("config-error", "query budget must be >= 1");
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
    Rng rng(seed);
    SquareResult result{x, 1, square_detail::margin(oracle(x), y)};
    if (result.margin < 0.0) return result;

    if (result.queries < query_budget) {
        Image init = x;
        for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t col = 0; col < w; ++col) {
                const float v = rng.bernoulli(0.5) ? eps : -eps;
                for (std::size_t row = 0; row < h; ++row) {
                    const std::size_t i = (row * w + col) * ch + c;
                    init[i] = attack_detail::clamp01(x[i] + v);
                }
            }
        const double m = square_detail::margin(oracle(init), y);
        ++result.queries;
        if (m < result.margin) {
            result.margin = m;
            result.adversarial = std::move(init);
        }
    }

    for (std::size_t iteration = 0; result.queries < query_budget && result.margin >= 0.0; ++iteration) {
        const double p = square_detail::p_selection(p_init, iteration, query_budget);
        const auto side = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::lround(std::sqrt(p * static_cast<double>(h * w)))), 1, std::min(h, w));
        const std::size_t r0 = rng.index(h - side + 1), c0 = rng.index(w - side + 1);
        Image proposal = result.adversarial;
        for (std::size_t c = 0; c < ch; ++c) {
            const float v = rng.bernoulli(0.5) ? eps : -eps;
            for (std::size_t row = r0; row < r0 + side; ++row)
                for (std::size_t col = c0; col < c0 + side; ++col) {
                    const std::size_t i = (row * w + col) * ch + c;
                    proposal[i] = attack_detail::clamp01(x[i] + v);
                }
        }
        const double m = square_detail::margin(oracle(proposal), y);
        ++result.queries;
        if (m < result.margin) {
            result.margin = m;
            result.adversarial = std::move(proposal);
        }
    }
    return result;
}

} // namespace dumb

#endif
