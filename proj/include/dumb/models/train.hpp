#ifndef DUMB_MODELS_TRAIN_HPP
#define DUMB_MODELS_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dumb/models/metrics.hpp"
#include "dumb/models/network.hpp"
#include "dumb/synthdata/dataset.hpp"

namespace dumb {

using Model = Network<float>;

/// Positive class for every reported F1: the minority class.
inline constexpr int kPositiveClass = 0;

struct TrainingConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};

struct ModelProvenance {
    std::string task;
    std::string source;
    std::string balance;
    std::string arch;
    std::uint64_t seed = 0;

    std::string id() const { return task + "-" + source + "-" + balance + "-" + arch; }
};

struct ModelRecord {
    ModelProvenance provenance;
    Model network;
    Metrics baseline;                      // test split
    std::vector<double> validation_f1;     // one entry per epoch
    std::size_t best_epoch = 0;            // 1-based

    std::string id() const { return provenance.id(); }
};

struct Prediction {
    std::vector<int> labels;
    Tensor<float> probabilities;  // N x K
};

/// Class probabilities and argmax labels (ties toward the lower class index).
/// Samples are evaluated one at a time so a sample's output never depends on
/// what else is in the batch.
inline Prediction predict(const Model& model, const Tensor<float>& batch) {
    model.check_batch(batch);
    const std::size_t n = batch.dim(0), stride = batch.size() / std::max<std::size_t>(n, 1);
    const std::size_t k = model.classes();
    Prediction out{std::vector<int>(n), Tensor<float>({n, k})};
    Shape one = batch.shape;
    one[0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor<float> x(one, std::vector<float>(batch.data.begin() + i * stride, batch.data.begin() + (i + 1) * stride));
        const Tensor<float> p = Tape<float>::softmax_rows(model.logits(x));
        int best = 0;
        for (std::size_t j = 0; j < k; ++j) {
            out.probabilities[i * k + j] = p[j];
            if (p[j] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
        }
        out.labels[i] = best;
    }
    return out;
}

inline int predict_label(const Model& model, const Image& image) { return predict(model, as_batch(image)).labels[0]; }

inline std::vector<int> predict_labels(const Model& model, const std::vector<LabeledImage>& items) {
    std::vector<int> labels;
    labels.reserve(items.size());
    for (const auto& item : items) labels.push_back(predict_label(model, item.image));
    return labels;
}

inline Metrics evaluate(const Model& model, const std::vector<LabeledImage>& items) {
    std::vector<int> truth;
    for (const auto& item : items) truth.push_back(item.label);
    return f1_score(predict_labels(model, items), truth, kPositiveClass);
}

/// Test-split metrics of a trained model.
inline Metrics evaluate_baseline(const Model& model, const std::vector<LabeledImage>& test_split) {
    return evaluate(model, test_split);
}

/// Mini-batch SGD with momentum on cross-entropy. Returns the checkpoint with
/// the best validation F1 (earliest epoch on ties) and its test metrics.
/// `split.train` is expected to be rebalanced already.
inline ModelRecord train(const Architecture& arch, const DatasetSplit& split, const ModelProvenance& provenance,
                         const TrainingConfig& config) {
    if (config.epochs < 1 || config.batch_size < 1) throw Error("config-error", "epochs and batch size must be >= 1");
    if (split.train.empty() || split.validation.empty()) throw Error("config-error", "empty training or validation split");
    const Shape input = split.train.front().image.shape;
    Model net = Model::initialize(arch, input, derive_seed(config.seed, "init"));
    Model best = net;
    std::vector<std::vector<float>> velocity;
    for (const auto& [name, t] : net.parameters()) velocity.emplace_back(t.size(), 0.0f);

    ModelRecord record;
    record.provenance = provenance;
    double best_f1 = -1.0;
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t image_size = numel(input);
    const auto lr = static_cast<float>(config.learning_rate), mu = static_cast<float>(config.momentum);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            Shape shape{count};
            shape.insert(shape.end(), input.begin(), input.end());
            Tensor<float> batch(shape);
            std::vector<int> labels(count);
            for (std::size_t b = 0; b < count; ++b) {
                const auto& item = split.train[order[start + b]];
                std::copy(item.image.data.begin(), item.image.data.end(), batch.data.begin() + b * image_size);
                labels[b] = item.label;
            }
            Tape<float> tape;
            std::vector<Var> params;
            const Var logits = net.forward_trainable(tape, tape.constant(std::move(batch)), params);
            const Var loss = tape.cross_entropy(logits, labels);
            if (!std::isfinite(tape.value(loss)[0])) {
                throw Error("training-diverged", provenance.id() + " loss became non-finite in epoch " + std::to_string(epoch));
            }
            tape.backward(loss);
            auto& p = net.parameters();
            for (std::size_t i = 0; i < p.size(); ++i) {
                const Tensor<float> g = tape.grad(params[i]);
                auto& v = velocity[i];
                auto& w = p[i].second.data;
                for (std::size_t j = 0; j < w.size(); ++j) {
                    v[j] = mu * v[j] + g[j];
                    w[j] -= lr * v[j];
                }
            }
        }
        for (const auto& [name, t] : net.parameters()) {
            if (!t.all_finite()) throw Error("training-diverged", provenance.id() + " parameter " + name + " is non-finite");
        }
        const double f1 = evaluate(net, split.validation).f1;
        record.validation_f1.push_back(f1);
        if (f1 > best_f1) {
            best_f1 = f1;
            best = net;
            record.best_epoch = epoch;
        }
    }
    record.network = std::move(best);
    record.baseline = evaluate_baseline(record.network, split.test);
    return record;
}

} // namespace dumb

#endif
