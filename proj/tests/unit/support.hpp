#ifndef DUMB_TESTS_SUPPORT_HPP
#define DUMB_TESTS_SUPPORT_HPP

#include <string>
#include <vector>

#include "dumb/diffcore/gradient.hpp"
#include "dumb/models/train.hpp"
#include "dumb/synthdata/dataset.hpp"

namespace dumb::fixtures {

inline Image random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Image img({h, w, c});
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

inline Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor<double> t(shape);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

/// logits = W^T flatten(x) + b with fixed weights; a closed-form oracle for
/// gradient-based attacks.
template <typename T>
struct LinearModel {
    Tensor<T> weight;  // features x classes
    Tensor<T> bias;    // classes

    Var forward(Tape<T>& tape, Var x) const {
        return tape.dense(tape.flatten(x), tape.constant(weight), tape.constant(bias));
    }
};

inline LinearModel<float> random_linear(const Shape& image_shape, std::uint64_t seed, std::size_t classes = 2) {
    Rng rng(seed);
    LinearModel<float> m{Tensor<float>({numel(image_shape), classes}), Tensor<float>({classes})};
    for (float& v : m.weight.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (float& v : m.bias.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    return m;
}

inline Architecture tiny_cnn() {
    return {"tiny", {ConvLayer{3, 3, 1, 1}, ReluLayer{}, PoolLayer{2}, FlattenLayer{}, DenseLayer{2}}};
}

inline Model random_cnn(const Shape& input, std::uint64_t seed) { return Model::initialize(tiny_cnn(), input, seed); }

/// Two well separated classes: dark images with a bright left half versus
/// bright right half, with pixel noise.
inline std::vector<LabeledImage> separable_images(std::size_t per_class, std::size_t size, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledImage> out;
    for (int label = 0; label < 2; ++label)
        for (std::size_t i = 0; i < per_class; ++i) {
            Image img({size, size, 3});
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const bool lit = label == 0 ? x < size / 2 : x >= size / 2;
                    for (std::size_t c = 0; c < 3; ++c)
                        img[(y * size + x) * 3 + c] =
                            std::clamp(static_cast<float>((lit ? 0.8 : 0.2) + rng.normal(0.0, 0.08)), 0.0f, 1.0f);
                }
            quantize_8bit(img);
            out.push_back({std::move(img), label});
        }
    return out;
}

} // namespace dumb::fixtures

#endif
