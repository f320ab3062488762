#ifndef DUMB_ATTACKS_DEEPFOOL_HPP
#define DUMB_ATTACKS_DEEPFOOL_HPP

#include <cmath>

#include "dumb/attacks/gradient_attacks.hpp"

namespace dumb {

/// Logits of a single image (1 x K row flattened).
template <TapeModel<float> M>
Tensor<float> logits_of(const M& model, const Image& x) {
    Tape<float> tape;
    return tape.value(model.forward(tape, tape.constant(as_batch(x))));
}

/// Argmax with ties toward the lower class index.
inline int argmax_label(const Tensor<float>& logits) {
    int best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j)
        if (logits[j] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
    return best;
}

struct DeepFoolResult {
    Image adversarial;
    bool flipped = false;
    std::size_t iterations = 0;
};

/// Binary DeepFool. Each iteration linearises the logit difference
/// d = f1 - f0 at the current point and steps r = -d / |grad d|^2 * grad d.
/// The accumulated step is scaled by (1 + overshoot) both when testing for a
/// label flip and in the returned image.
template <TapeModel<float> M>
DeepFoolResult deepfool(const M& model, const Image& x, float overshoot, std::size_t max_iter) {
    if (max_iter < 1) throw Error("config-error", "max_iter must be >= 1");
    if (!(overshoot >= 0.0f)) throw Error("config-error", "overshoot must be >= 0");
    const Tensor<float> clean = logits_of(model, x);
    if (clean.size() != 2) throw Error("config-error", "deepfool is implemented for binary classifiers");
    const int original = argmax_label(clean);
    Image total(x.shape);
    const auto perturbed = [&] {
        Image out = x;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = attack_detail::clamp01(x[i] + (1.0f + overshoot) * total[i]);
        return out;
    };
    DeepFoolResult result;
    Image current = x;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Tape<float> tape;
        Tensor<float> in = as_batch(current);
        in.requires_grad = true;
        const Var input = tape.input(std::move(in));
        const Var logits = model.forward(tape, input);
        if (argmax_label(tape.value(logits)) != original) {
            result.flipped = true;
            break;
        }
        Tensor<float> coeff(tape.value(logits).shape);
        coeff[0] = -1.0f;
        coeff[1] = 1.0f;
        const Var diff = tape.weighted_sum(logits, coeff);
        tape.backward(diff);
        const Tensor<float> w = tape.grad(input);
        double norm2 = 0.0;
        for (float v : w.data) norm2 += static_cast<double>(v) * v;
        ++result.iterations;
        if (norm2 == 0.0) break;
        const auto scale = static_cast<float>(-static_cast<double>(tape.value(diff)[0]) / norm2);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += scale * w[i];
        current = perturbed();
    }
    if (!result.flipped) result.flipped = argmax_label(logits_of(model, current)) != original;
    result.adversarial = perturbed();
    return result;
}

} // namespace dumb

#endif
