#ifndef DUMB_MODELS_METRICS_HPP
#define DUMB_MODELS_METRICS_HPP

#include <span>
#include <string>

#include "dumb/core/error.hpp"

namespace dumb {

struct Metrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

/// Confusion counts and precision/recall/F1 for `positive_class`.
/// Undefined precision or recall is reported as 0, and F1 = 0 when P + R = 0.
inline Metrics f1_score(std::span<const int> predictions, std::span<const int> truth, int positive_class) {
    if (predictions.size() != truth.size()) {
        throw Error("eval-error", "prediction/label length mismatch " + std::to_string(predictions.size()) + " vs " +
                                      std::to_string(truth.size()));
    }
    if (predictions.empty()) throw Error("empty-eval", "no predictions to score");
    Metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pred_pos = predictions[i] == positive_class;
        const bool true_pos = truth[i] == positive_class;
        if (pred_pos && true_pos) ++m.tp;
        else if (pred_pos) ++m.fp;
        else if (true_pos) ++m.fn;
        else ++m.tn;
    }
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    m.precision = m.tp + m.fp > 0 ? d(m.tp) / d(m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn > 0 ? d(m.tp) / d(m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.accuracy = d(m.tp + m.tn) / d(truth.size());
    return m;
}

} // namespace dumb

#endif
