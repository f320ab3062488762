#ifndef DUMB_PIPELINE_CONFIG_HPP
#define DUMB_PIPELINE_CONFIG_HPP

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dumb/attacks/spec.hpp"
#include "dumb/harness/experiment.hpp"
#include "dumb/models/train.hpp"
#include "dumb/synthdata/generate.hpp"
#include "dumb/tuning/tune.hpp"

namespace dumb {

/// Everything a run depends on. All defaults are materialised into the
/// effective config written next to the outputs.
struct RunConfig {
    std::vector<std::string> tasks{"easy", "medium", "hard"};
    MatrixShape shape;
    std::vector<std::string> attacks;
    nlohmann::json grid_overrides = nlohmann::json::object();   // name -> {min,max,step}
    nlohmann::json hyper_overrides = nlohmann::json::object();  // name -> {key: value}
    double alpha = 0.4;
    std::size_t eval_samples = 100;
    std::size_t per_class = 1000;
    std::size_t image_size = 32;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
    TrainingConfig training;
    std::uint64_t seed = 20240917;
    bool export_png = true;
    // execution only; excluded from the config hash
    std::size_t jobs = 1;
    std::string output = "runs";

    RunConfig() {
        for (const auto& n : mathematical_attack_names()) attacks.push_back(n);
        for (const auto& n : non_mathematical_attack_names()) attacks.push_back(n);
    }

    std::vector<AttackSpec> attack_specs() const {
        std::vector<AttackSpec> out;
        for (const auto& name : attacks) {
            AttackSpec s = make_attack_spec(name, image_size);
            if (grid_overrides.contains(name)) {
                const auto& g = grid_overrides.at(name);
                s.grid = Grid{g.at("min"), g.at("max"), g.at("step")};
            }
            if (hyper_overrides.contains(name)) {
                for (auto it = hyper_overrides.at(name).begin(); it != hyper_overrides.at(name).end(); ++it)
                    s.hyper[it.key()] = it.value().get<double>();
            }
            validate(s);
            out.push_back(std::move(s));
        }
        return out;
    }

    AttackSpec attack_spec(const std::string& name) const {
        for (auto& s : attack_specs())
            if (s.name == name) return s;
        throw Error("config-error", "attack " + name + " is not configured");
    }

    TuningConfig tuning_config() const {
        TuningConfig t;
        t.alpha = alpha;
        t.samples = eval_samples;
        t.seed = derive_seed(seed, "attack-randomness");
        return t;
    }

    nlohmann::json to_json(bool include_execution = true) const {
        nlohmann::json j = {{"tasks", tasks},
                            {"sources", shape.sources},
                            {"balances", shape.balances},
                            {"archs", shape.archs},
                            {"attacks", attacks},
                            {"grids", grid_overrides},
                            {"hyper", hyper_overrides},
                            {"alpha", alpha},
                            {"eval_samples", eval_samples},
                            {"per_class", per_class},
                            {"image_size", image_size},
                            {"split", split_ratios},
                            {"training",
                             {{"epochs", training.epochs},
                              {"batch_size", training.batch_size},
                              {"learning_rate", training.learning_rate},
                              {"momentum", training.momentum}}},
                            {"seed", seed},
                            {"export_png", export_png}};
        j["effective_attacks"] = nlohmann::json::array();
        for (const auto& s : attack_specs()) {
            nlohmann::json a = {{"name", s.name}, {"family", family_name(s.family)}, {"parameter", s.parameter}, {"hyper", s.hyper}};
            if (s.grid) a["grid"] = {{"min", s.grid->min}, {"max", s.grid->max}, {"step", s.grid->step}};
            j["effective_attacks"].push_back(a);
        }
        if (include_execution) {
            j["jobs"] = jobs;
            j["output"] = output;
        }
        return j;
    }

    /// Hash of everything that influences results.
    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(false).dump())));
        return std::string(buf).substr(0, 12);
    }

    void validate_config() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("config-error", "alpha must lie in (0, 1]");
        if (tasks.empty() || shape.sources.empty() || shape.balances.empty() || shape.archs.empty() || attacks.empty()) {
            throw Error("config-error", "tasks, sources, balances, archs and attacks must be non-empty");
        }
        for (const auto& t : tasks) make_task(t, image_size);
        for (const auto& s : shape.sources) make_source(s);
        for (const auto& b : shape.balances) balance_level(b);
        for (const auto& a : shape.archs) make_architecture(a);
        attack_specs();
        if (eval_samples == 0 || eval_samples % 2) throw Error("config-error", "eval_samples must be positive and even");
        if (per_class < 50) throw Error("config-error", "per_class must be at least 50");
        if (training.epochs < 1 || training.batch_size < 1) throw Error("config-error", "epochs and batch size must be >= 1");
        if (jobs < 1) throw Error("config-error", "jobs must be >= 1");
    }
};

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("tasks")) c.tasks = j.at("tasks").get<std::vector<std::string>>();
        if (j.contains("sources")) c.shape.sources = j.at("sources").get<std::vector<std::string>>();
        if (j.contains("balances")) c.shape.balances = j.at("balances").get<std::vector<std::string>>();
        if (j.contains("archs")) c.shape.archs = j.at("archs").get<std::vector<std::string>>();
        if (j.contains("attacks")) c.attacks = j.at("attacks").get<std::vector<std::string>>();
        if (j.contains("grids")) c.grid_overrides = j.at("grids");
        if (j.contains("hyper")) c.hyper_overrides = j.at("hyper");
        if (j.contains("alpha")) c.alpha = j.at("alpha");
        if (j.contains("eval_samples")) c.eval_samples = j.at("eval_samples");
        if (j.contains("per_class")) c.per_class = j.at("per_class");
        if (j.contains("image_size")) c.image_size = j.at("image_size");
        if (j.contains("split")) c.split_ratios = j.at("split").get<std::array<double, 3>>();
        if (j.contains("training")) {
            const auto& t = j.at("training");
            if (t.contains("epochs")) c.training.epochs = t.at("epochs");
            if (t.contains("batch_size")) c.training.batch_size = t.at("batch_size");
            if (t.contains("learning_rate")) c.training.learning_rate = t.at("learning_rate");
            if (t.contains("momentum")) c.training.momentum = t.at("momentum");
        }
        if (j.contains("seed")) c.seed = j.at("seed");
        if (j.contains("export_png")) c.export_png = j.at("export_png");
        if (j.contains("jobs")) c.jobs = j.at("jobs");
        if (j.contains("output")) c.output = j.at("output");
    } catch (const nlohmann::json::exception& e) {
        throw Error("config-error", e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("config-error", "cannot read config " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("config-error", e.what());
    }
}

} // namespace dumb

#endif
