#ifndef DUMB_HARNESS_KS_HPP
#define DUMB_HARNESS_KS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dumb/core/error.hpp"

namespace dumb {

struct KsResult {
    double statistic = 0.0;  // D = sup |F_a - F_b|
    double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
/// Uses the Jacobi theta form for small lambda, where the alternating series
/// converges slowly.
inline double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double q;
    if (lambda < 1.18) {
        const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
        double s = 0.0;
        for (int k = 1; k <= 40; ++k) {
            const double term = std::pow(y, static_cast<double>((2 * k - 1) * (2 * k - 1)));
            s += term;
            if (term < 1e-300) break;
        }
        q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
    } else {
        q = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            q += (k % 2 == 1 ? 2.0 : -2.0) * term;
            if (term < 1e-300) break;
        }
    }
    return std::clamp(q, 0.0, 1.0);
}

/// Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q(sqrt(n m / (n + m)) * D).
inline KsResult ks_test(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("eval-error", "ks_test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_survival(std::sqrt(n * m / (n + m)) * d);
    return r;
}

} // namespace dumb

#endif
