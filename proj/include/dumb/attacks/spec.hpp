#ifndef DUMB_ATTACKS_SPEC_HPP
#define DUMB_ATTACKS_SPEC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dumb/attacks/deepfool.hpp"
#include "dumb/attacks/gradient_attacks.hpp"
#include "dumb/attacks/square.hpp"
#include "dumb/attacks/transforms.hpp"

namespace dumb {

enum class AttackFamily { Mathematical, NonMathematical };

inline const char* family_name(AttackFamily f) {
    return f == AttackFamily::Mathematical ? "mathematical" : "non-mathematical";
}

/// Inclusive arithmetic grid min, min + step, ..., <= max.
struct Grid {
    double min = 0.0, max = 0.0, step = 1.0;

    std::vector<double> values() const {
        std::vector<double> out;
        const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) out.push_back(std::round((min + step * static_cast<double>(i)) * 1e12) / 1e12);
        return out;
    }
};

struct AttackSpec {
    std::string name;
    AttackFamily family = AttackFamily::Mathematical;
    std::string parameter;            // empty for parameter-free transformations
    std::optional<Grid> grid;
    std::map<std::string, double> hyper;  // fixed hyperparameters

    bool mathematical() const { return family == AttackFamily::Mathematical; }
    bool has_parameter() const { return !parameter.empty(); }
    std::vector<double> grid_values() const { return grid ? grid->values() : std::vector<double>{0.0}; }
    double hp(const std::string& key) const {
        const auto it = hyper.find(key);
        if (it == hyper.end()) throw Error("config-error", name + " lacks hyperparameter " + key);
        return it->second;
    }
};

inline const std::array<std::string, 7>& mathematical_attack_names() {
    static const std::array<std::string, 7> names{"FGSM", "BIM", "PGD", "RFGSM", "TIFGSM", "DeepFool", "Square"};
    return names;
}

inline const std::array<std::string, 6>& non_mathematical_attack_names() {
    static const std::array<std::string, 6> names{"BoxBlur", "GaussianNoise", "Grayscale", "Invert", "RandomBlackBox",
                                                  "SaltPepper"};
    return names;
}

inline bool is_mathematical_attack(const std::string& name) {
    const auto& m = mathematical_attack_names();
    return std::find(m.begin(), m.end(), name) != m.end();
}

inline std::string parameter_symbol(const std::string& parameter) {
    if (parameter == "epsilon") return "ε";
    return parameter;
}

/// Human-readable tuned setting, e.g. "FGSM, ε = 0.1".
inline std::string format_setting(const AttackSpec& spec, double value) {
    if (!spec.has_parameter()) return spec.name;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return spec.name + ", " + parameter_symbol(spec.parameter) + " = " + buf;
}

inline void validate(const AttackSpec& spec) {
    if (spec.mathematical() != is_mathematical_attack(spec.name)) {
        throw Error("config-error", spec.name + " has the wrong attack family");
    }
    if (spec.has_parameter() != spec.grid.has_value()) throw Error("config-error", spec.name + " grid/parameter mismatch");
    if (spec.grid && !(spec.grid->min < spec.grid->max && spec.grid->step > 0.0)) {
        throw Error("config-error", spec.name + " grid needs min < max and step > 0");
    }
}

/// Default spec for one of the 13 attacks. Box sizes scale with image_size.
inline AttackSpec make_attack_spec(const std::string& name, std::size_t image_size = 32) {
    const Grid eps{0.01, 0.3, 0.01};
    const std::map<std::string, double> iterative{{"steps", 10}, {"step_fraction", 0.25}};
    AttackSpec s;
    s.name = name;
    s.family = is_mathematical_attack(name) ? AttackFamily::Mathematical : AttackFamily::NonMathematical;
    if (name == "FGSM") {
        s.parameter = "epsilon";
        s.grid = eps;
    } else if (name == "BIM" || name == "RFGSM") {
        s.parameter = "epsilon";
        s.grid = eps;
        s.hyper = iterative;
    } else if (name == "PGD") {
        s.parameter = "epsilon";
        s.grid = eps;
        s.hyper = iterative;
        s.hyper["random_start"] = 1;
    } else if (name == "TIFGSM") {
        s.parameter = "epsilon";
        s.grid = eps;
        s.hyper = iterative;
        s.hyper["kernel_size"] = 5;
        s.hyper["kernel_sigma"] = 1.5;
        s.hyper["momentum"] = 1.0;
    } else if (name == "DeepFool") {
        s.parameter = "overshoot";
        s.grid = Grid{10, 100, 1};
        s.hyper["max_iter"] = 50;
    } else if (name == "Square") {
        s.parameter = "epsilon";
        s.grid = eps;
        s.hyper["query_budget"] = 500;
        s.hyper["p_init"] = 0.8;
    } else if (name == "BoxBlur") {
        s.parameter = "radius";
        s.grid = Grid{1, 5, 1};
    } else if (name == "GaussianNoise") {
        s.parameter = "sigma";
        s.grid = Grid{0.02, 0.5, 0.02};
    } else if (name == "RandomBlackBox") {
        s.parameter = "size";
        s.grid = Grid{2, static_cast<double>(image_size / 2), 2};
    } else if (name == "SaltPepper") {
        s.parameter = "amount";
        s.grid = Grid{0.01, 0.3, 0.01};
    } else if (name != "Grayscale" && name != "Invert") {
        throw Error("config-error", "unknown attack " + name);
    }
    validate(s);
    return s;
}

inline std::vector<AttackSpec> default_attacks(std::size_t image_size = 32) {
    std::vector<AttackSpec> out;
    for (const auto& n : mathematical_attack_names()) out.push_back(make_attack_spec(n, image_size));
    for (const auto& n : non_mathematical_attack_names()) out.push_back(make_attack_spec(n, image_size));
    return out;
}

struct AttackOutput {
    Image adversarial;
    bool flipped = true;        // DeepFool only
    std::size_t queries = 0;    // Square only
};

/// Run `spec` at parameter value `param`. The model is required for the
/// mathematical family and ignored otherwise.
template <TapeModel<float> M>
AttackOutput run_attack(const AttackSpec& spec, const M* model, const Image& x, int y, double param, std::uint64_t seed) {
    const auto eps = static_cast<float>(param);
    if (spec.mathematical() && model == nullptr) throw Error("config-error", spec.name + " needs a model");
    const auto steps = [&] { return static_cast<std::size_t>(spec.hp("steps")); };
    const auto step = [&] { return static_cast<float>(param * spec.hp("step_fraction")); };
    if (spec.name == "FGSM") return {fgsm(*model, x, y, eps)};
    if (spec.name == "BIM") return {bim(*model, x, y, eps, steps(), step())};
    if (spec.name == "PGD") return {pgd(*model, x, y, eps, steps(), step(), spec.hp("random_start") != 0.0, seed)};
    if (spec.name == "RFGSM") return {rfgsm(*model, x, y, eps, steps(), step(), seed)};
    if (spec.name == "TIFGSM") {
        return {tifgsm(*model, x, y, eps, steps(), step(), static_cast<std::size_t>(spec.hp("kernel_size")),
                       spec.hp("kernel_sigma"), static_cast<float>(spec.hp("momentum")))};
    }
    if (spec.name == "DeepFool") {
        auto r = deepfool(*model, x, static_cast<float>(param), static_cast<std::size_t>(spec.hp("max_iter")));
        return {std::move(r.adversarial), r.flipped, 0};
    }
    if (spec.name == "Square") {
        const ScoreOracle oracle = [model](const Image& img) {
            const Tensor<float> p = Tape<float>::softmax_rows(logits_of(*model, img));
            return p.data;
        };
        auto r = square_attack(oracle, x, y, eps, static_cast<std::size_t>(spec.hp("query_budget")), spec.hp("p_init"), seed);
        return {std::move(r.adversarial), true, r.queries};
    }
    if (spec.name == "BoxBlur") return {box_blur(x, static_cast<std::size_t>(std::lround(param)))};
    if (spec.name == "GaussianNoise") return {gaussian_noise(x, param, seed)};
    if (spec.name == "Grayscale") return {grayscale(x)};
    if (spec.name == "Invert") return {invert(x)};
    if (spec.name == "RandomBlackBox") return {random_black_box(x, static_cast<std::size_t>(std::lround(param)), seed)};
    if (spec.name == "SaltPepper") return {salt_pepper(x, param, seed)};
    throw Error("config-error", "unknown attack " + spec.name);
}

} // namespace dumb

#endif
