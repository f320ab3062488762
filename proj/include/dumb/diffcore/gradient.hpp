#ifndef DUMB_DIFFCORE_GRADIENT_HPP
#define DUMB_DIFFCORE_GRADIENT_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <vector>

#include "dumb/diffcore/tape.hpp"

namespace dumb {

/// Anything that maps a batch Var to an N x K logits Var on a tape.
template <typename M, typename T>
concept TapeModel = requires(const M& m, Tape<T>& tape, Var x) {
    { m.forward(tape, x) } -> std::same_as<Var>;
};

template <typename T>
struct LossAndGradient {
    T loss{};
    Tensor<T> gradient;
};

/// Cross-entropy of the model on a single image x (H x W x C) with label y,
/// and its gradient with respect to x. Model parameters are not modified.
template <typename T, TapeModel<T> M>
LossAndGradient<T> loss_and_input_gradient(const M& model, const Tensor<T>& x, int y) {
    Tape<T> tape;
    Tensor<T> batch = as_batch(x);
    batch.requires_grad = true;
    const Var in = tape.input(std::move(batch));
    const Var logits = model.forward(tape, in);
    const int labels[1] = {y};
    const Var loss = tape.cross_entropy(logits, labels);
    tape.backward(loss);
    Tensor<T> g = tape.grad(in);
    g.shape = x.shape;
    return {tape.value(loss)[0], std::move(g)};
}

/// d J(theta, x, y) / dx for cross-entropy J.
template <typename T, TapeModel<T> M>
Tensor<T> grad_wrt_input(const M& model, const Tensor<T>& x, int y) {
    return loss_and_input_gradient<T>(model, x, y).gradient;
}

template <typename T, TapeModel<T> M>
T input_loss(const M& model, const Tensor<T>& x, int y) {
    Tape<T> tape;
    const Var in = tape.constant(as_batch(x));
    const Var logits = model.forward(tape, in);
    const int labels[1] = {y};
    return tape.value(tape.cross_entropy(logits, labels))[0];
}

struct GradientCheckReport {
    double max_relative_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Compare the analytic input gradient with central finite differences.
/// The deviation is max|analytic - numeric| scaled by the larger of the two
/// gradients' max-norms, so near-zero components do not dominate.
template <typename M>
    requires TapeModel<M, double>
GradientCheckReport finite_difference_check(const M& model, const Tensor<double>& x, int y, double step,
                                            double tolerance) {
    if (!(step > 0.0)) throw Error("gradcheck-error", "step must be positive");
    const Tensor<double> analytic = grad_wrt_input<double>(model, x, y);
    Tensor<double> probe = x;
    double max_diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + step;
        const double up = input_loss<double>(model, probe, y);
        probe[i] = x[i] - step;
        const double down = input_loss<double>(model, probe, y);
        probe[i] = x[i];
        const double numeric = (up - down) / (2.0 * step);
        max_diff = std::max(max_diff, std::abs(numeric - analytic[i]));
        scale = std::max({scale, std::abs(numeric), std::abs(analytic[i])});
    }
    GradientCheckReport report;
    report.tolerance = tolerance;
    report.max_relative_deviation = scale > 0.0 ? max_diff / scale : 0.0;
    report.passed = report.max_relative_deviation < tolerance;
    return report;
}

} // namespace dumb

#endif
