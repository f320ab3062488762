#ifndef DUMB_MODELS_NETWORK_HPP
#define DUMB_MODELS_NETWORK_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dumb/core/random.hpp"
#include "dumb/diffcore/checkpoint.hpp"
#include "dumb/diffcore/tape.hpp"

namespace dumb {

struct ConvLayer {
    std::size_t out_channels;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 1;
};
struct PoolLayer {
    std::size_t window = 2;
};
struct ReluLayer {};
struct FlattenLayer {};
struct DenseLayer {
    std::size_t out_features;
};

using Layer = std::variant<ConvLayer, PoolLayer, ReluLayer, FlattenLayer, DenseLayer>;

struct Architecture {
    std::string id;
    std::vector<Layer> layers;
};

/// The three desk-scale architectures, in increasing complexity.
inline const std::vector<std::string>& architecture_ids() {
    static const std::vector<std::string> ids{"arch-S", "arch-M", "arch-L"};
    return ids;
}

inline Architecture make_architecture(const std::string& id, std::size_t classes = 2) {
    if (id == "arch-S") {
        return {id, {ConvLayer{4, 3, 2, 1}, ReluLayer{}, PoolLayer{2}, FlattenLayer{}, DenseLayer{classes}}};
    }
    if (id == "arch-M") {
        return {id,
                {ConvLayer{8}, ReluLayer{}, PoolLayer{2}, ConvLayer{16}, ReluLayer{}, PoolLayer{2}, FlattenLayer{},
                 DenseLayer{classes}}};
    }
    if (id == "arch-L") {
        return {id,
                {ConvLayer{16}, ReluLayer{}, PoolLayer{2}, ConvLayer{32}, ReluLayer{}, PoolLayer{2}, ConvLayer{32},
                 ReluLayer{}, PoolLayer{2}, FlattenLayer{}, DenseLayer{32}, ReluLayer{}, DenseLayer{classes}}};
    }
    throw Error("config-error", "unknown architecture " + id);
}

/// A feed-forward classifier: an Architecture plus its parameter tensors.
/// Immutable after construction apart from explicit parameter updates during
/// training; safe to share across threads for inference.
template <typename T>
class Network {
public:
    using Params = std::vector<std::pair<std::string, Tensor<T>>>;

    Network() = default;
    Network(Architecture arch, Shape input_shape, Params params)
        : arch_(std::move(arch)), input_shape_(std::move(input_shape)), params_(std::move(params)) {}

    /// He-uniform weights, zero biases.
    static Network initialize(const Architecture& arch, const Shape& input_shape, std::uint64_t seed) {
        Rng rng(seed);
        Params params;
        Shape cur = input_shape;  // H x W x C, or {features} after flatten
        int conv = 0, dense = 0;
        for (const Layer& layer : arch.layers) {
            if (const auto* c = std::get_if<ConvLayer>(&layer)) {
                const std::size_t fan_in = c->kernel * c->kernel * cur[2];
                params.emplace_back("conv" + std::to_string(++conv) + ".weight",
                                    uniform_tensor({c->kernel, c->kernel, cur[2], c->out_channels}, fan_in, rng));
                params.emplace_back("conv" + std::to_string(conv) + ".bias", Tensor<T>({c->out_channels}));
                cur = {(cur[0] + 2 * c->padding - c->kernel) / c->stride + 1,
                       (cur[1] + 2 * c->padding - c->kernel) / c->stride + 1, c->out_channels};
            } else if (const auto* p = std::get_if<PoolLayer>(&layer)) {
                cur = {cur[0] / p->window, cur[1] / p->window, cur[2]};
            } else if (std::holds_alternative<FlattenLayer>(layer)) {
                cur = {numel(cur)};
            } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
                params.emplace_back("dense" + std::to_string(++dense) + ".weight",
                                    uniform_tensor({cur[0], d->out_features}, cur[0], rng));
                params.emplace_back("dense" + std::to_string(dense) + ".bias", Tensor<T>({d->out_features}));
                cur = {d->out_features};
            }
        }
        return Network(arch, input_shape, std::move(params));
    }

    const Architecture& architecture() const { return arch_; }
    const Shape& input_shape() const { return input_shape_; }
    const Params& parameters() const { return params_; }
    Params& parameters() { return params_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : params_) n += t.size();
        return n;
    }

    std::size_t classes() const { return params_.back().second.size(); }

    /// Inference trace: parameters enter the tape as constants.
    Var forward(Tape<T>& tape, Var x) const {
        std::vector<Var> vars;
        for (const auto& [name, t] : params_) vars.push_back(tape.constant(t));
        return run(tape, x, vars);
    }

    /// Training trace: parameters are recorded as gradient-tracked inputs.
    Var forward_trainable(Tape<T>& tape, Var x, std::vector<Var>& param_vars) const {
        param_vars.clear();
        for (const auto& [name, t] : params_) {
            Tensor<T> p = t;
            p.requires_grad = true;
            param_vars.push_back(tape.input(std::move(p)));
        }
        return run(tape, x, param_vars);
    }

    /// Logits for an N x H x W x C batch.
    Tensor<T> logits(const Tensor<T>& batch) const {
        check_batch(batch);
        Tape<T> tape;
        const Var out = forward(tape, tape.constant(batch));
        return tape.value(out);
    }

    void check_batch(const Tensor<T>& batch) const {
        if (batch.rank() != 4 || Shape(batch.shape.begin() + 1, batch.shape.end()) != input_shape_) {
            throw Error("shape-error", "batch " + shape_string(batch.shape) + " does not match input " +
                                           shape_string(input_shape_));
        }
    }

    template <typename U>
    Network<U> cast() const {
        typename Network<U>::Params p;
        for (const auto& [name, t] : params_) p.emplace_back(name, t.template cast<U>());
        return Network<U>(arch_, input_shape_, std::move(p));
    }

    NamedTensors to_named_tensors() const {
        NamedTensors out;
        for (const auto& [name, t] : params_) out.emplace_back(name, t.template cast<float>());
        return out;
    }

    static Network from_named_tensors(const Architecture& arch, const Shape& input_shape, const NamedTensors& tensors) {
        Network reference = Network<float>::initialize(arch, input_shape, 0).template cast<T>();
        if (tensors.size() != reference.params_.size()) throw Error("checkpoint-error", "parameter count mismatch");
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            if (tensors[i].first != reference.params_[i].first ||
                tensors[i].second.shape != reference.params_[i].second.shape) {
                throw Error("checkpoint-error", "unexpected tensor " + tensors[i].first);
            }
            reference.params_[i].second = tensors[i].second.template cast<T>();
        }
        return reference;
    }

private:
    static Tensor<T> uniform_tensor(Shape shape, std::size_t fan_in, Rng& rng) {
        Tensor<T> t(std::move(shape));
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (T& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
        return t;
    }

    Var run(Tape<T>& tape, Var x, const std::vector<Var>& vars) const {
        std::size_t next = 0;
        x = tape.add_scalar(x, T(-0.5));  // centre pixel values
        for (const Layer& layer : arch_.layers) {
            if (const auto* c = std::get_if<ConvLayer>(&layer)) {
                x = tape.conv2d(x, vars[next], vars[next + 1], c->stride, c->padding);
                next += 2;
            } else if (const auto* p = std::get_if<PoolLayer>(&layer)) {
                x = tape.maxpool2d(x, p->window);
            } else if (std::holds_alternative<ReluLayer>(layer)) {
                x = tape.relu(x);
            } else if (std::holds_alternative<FlattenLayer>(layer)) {
                x = tape.flatten(x);
            } else if (std::holds_alternative<DenseLayer>(layer)) {
                x = tape.dense(x, vars[next], vars[next + 1]);
                next += 2;
            }
        }
        return x;
    }

    Architecture arch_;
    Shape input_shape_;
    Params params_;
};

} // namespace dumb

#endif
