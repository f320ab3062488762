#ifndef DUMB_TUNING_TUNE_HPP
#define DUMB_TUNING_TUNE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dumb/attacks/spec.hpp"
#include "dumb/models/train.hpp"
#include "dumb/perceptual/ssim.hpp"

namespace dumb {

/// Fraction of adversarial samples whose predicted label differs from the
/// true label. Originals are expected to be classified correctly upstream.
inline double asr(const Model& model, const std::vector<Image>& originals, const std::vector<Image>& adversarials,
                  const std::vector<int>& labels) {
    if (originals.size() != adversarials.size() || adversarials.size() != labels.size()) {
        throw Error("eval-error", "asr inputs differ in length");
    }
    if (labels.empty()) throw Error("eval-error", "asr of an empty sample set");
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) flipped += predict_label(model, adversarials[i]) != labels[i] ? 1 : 0;
    return static_cast<double>(flipped) / static_cast<double>(labels.size());
}

struct TuningConfig {
    double alpha = 0.4;
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    SsimConfig ssim;
};

struct TracePoint {
    double parameter = 0.0;
    double asr = 0.0;
    double mean_ssim = 0.0;
    std::size_t fooled = 0;              // sum over samples and evaluation models
    std::vector<std::uint8_t> sample_fooled;  // per sample: number of evaluation models fooled
    std::vector<double> sample_ssim;
};

struct TuningResult {
    std::string attack;
    bool feasible = false;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::size_t gamma_index = 0;
    std::size_t evaluation_models = 1;
    std::vector<int> labels;                 // true label of each tuning sample
    std::vector<TracePoint> trace;           // one entry per grid point
    std::vector<Image> adversarials;         // the sample set at gamma (empty if infeasible)

    std::string status() const { return feasible ? "ok" : "constraint-infeasible"; }
};

/// Per-sample seed keyed by sample content, so a sample receives the same
/// randomness whatever subset it is tuned in.
inline std::uint64_t sample_seed(std::uint64_t base, const std::string& attack, const Image& x) {
    return derive_seed(base, attack + "/" + content_hash(x));
}

/// Exhaustive grid search for the attack parameter with the highest ASR
/// subject to mean SSIM >= alpha; ties go to the smaller parameter.
/// Mathematical attacks are generated on `evaluators[0]` (the surrogate);
/// ASR is the mean over all evaluators. Parameter-free transformations have a
/// single point and nothing to choose, so that point is returned as is.
inline TuningResult tune(const AttackSpec& spec, const std::vector<const Model*>& evaluators,
                         const std::vector<LabeledImage>& samples, const TuningConfig& config) {
    if (evaluators.empty()) throw Error("eval-error", "tuning needs at least one model");
    if (samples.empty()) throw Error("eval-error", "tuning needs at least one sample");
    if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw Error("config-error", "alpha must lie in (0, 1]");
    TuningResult result;
    result.attack = spec.name;
    result.evaluation_models = evaluators.size();
    for (const auto& s : samples) result.labels.push_back(s.label);
    std::vector<std::uint64_t> seeds;
    for (const auto& s : samples) seeds.push_back(sample_seed(config.seed, spec.name, s.image));

    const std::vector<double> grid = spec.grid_values();
    const double denominator = static_cast<double>(samples.size() * evaluators.size());
    std::size_t best_fooled = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        TracePoint point;
        point.parameter = grid[g];
        std::vector<Image> adversarials;
        double ssim_sum = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            AttackOutput out = run_attack(spec, evaluators.front(), samples[i].image, samples[i].label, grid[g], seeds[i]);
            std::uint8_t fooled = 0;
            for (const Model* m : evaluators) fooled += predict_label(*m, out.adversarial) != samples[i].label ? 1 : 0;
            const double s = ssim(samples[i].image, out.adversarial, config.ssim);
            point.sample_fooled.push_back(fooled);
            point.sample_ssim.push_back(s);
            point.fooled += fooled;
            ssim_sum += s;
            adversarials.push_back(std::move(out.adversarial));
        }
        point.asr = static_cast<double>(point.fooled) / denominator;
        point.mean_ssim = ssim_sum / static_cast<double>(samples.size());
        const bool admissible = !spec.has_parameter() || point.mean_ssim >= config.alpha;
        if (admissible && (!result.feasible || point.fooled > best_fooled)) {
            result.feasible = true;
            result.gamma = grid[g];
            result.gamma_index = g;
            best_fooled = point.fooled;
            result.adversarials = std::move(adversarials);
        }
        result.trace.push_back(std::move(point));
    }
    return result;
}

/// Independent tuning runs restricted to the samples of each true class.
inline std::array<TuningResult, 2> tune_per_class(const AttackSpec& spec, const std::vector<const Model*>& evaluators,
                                                  const std::vector<LabeledImage>& samples, const TuningConfig& config) {
    std::array<TuningResult, 2> out;
    for (int label = 0; label < 2; ++label) {
        std::vector<LabeledImage> subset;
        for (const auto& s : samples)
            if (s.label == label) subset.push_back(s);
        if (subset.empty()) throw Error("eval-error", "no tuning samples of class " + std::to_string(label));
        out[static_cast<std::size_t>(label)] = tune(spec, evaluators, subset, config);
    }
    return out;
}

struct ClassTracePoint {
    double parameter = 0.0;
    double asr = 0.0;
    double mean_ssim = 0.0;
    std::size_t samples = 0;
};

/// Per-class view of a global trace, derived from its per-sample records.
inline std::vector<ClassTracePoint> class_trace(const TuningResult& result, int label) {
    std::vector<ClassTracePoint> out;
    for (const auto& point : result.trace) {
        ClassTracePoint c{point.parameter, 0.0, 0.0, 0};
        std::size_t fooled = 0;
        for (std::size_t i = 0; i < result.labels.size(); ++i) {
            if (result.labels[i] != label) continue;
            ++c.samples;
            fooled += point.sample_fooled[i];
            c.mean_ssim += point.sample_ssim[i];
        }
        if (c.samples > 0) {
            c.asr = static_cast<double>(fooled) / static_cast<double>(c.samples * result.evaluation_models);
            c.mean_ssim /= static_cast<double>(c.samples);
        }
        out.push_back(c);
    }
    return out;
}

} // namespace dumb

#endif
