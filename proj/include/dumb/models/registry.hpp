#ifndef DUMB_MODELS_REGISTRY_HPP
#define DUMB_MODELS_REGISTRY_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dumb/models/train.hpp"

namespace dumb {

inline nlohmann::json metrics_json(const Metrics& m) {
    return {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}, {"precision", m.precision},
            {"recall", m.recall}, {"f1", m.f1}, {"accuracy", m.accuracy}};
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.tp = j.at("tp");
    m.fp = j.at("fp");
    m.tn = j.at("tn");
    m.fn = j.at("fn");
    m.precision = j.at("precision");
    m.recall = j.at("recall");
    m.f1 = j.at("f1");
    m.accuracy = j.at("accuracy");
    return m;
}

/// Directory of DMB1 checkpoints plus index.json keyed by model id
/// (task, source, balance, arch; the seed is stored alongside).
class ModelRegistry {
public:
    explicit ModelRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::ifstream f(dir_ / "index.json");
        if (f) index_ = nlohmann::json::parse(f);
        if (!index_.is_object()) index_ = nlohmann::json::object();
    }

    const std::filesystem::path& directory() const { return dir_; }

    bool contains(const std::string& id) const { return index_.contains(id); }
    std::size_t size() const { return index_.size(); }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (auto it = index_.begin(); it != index_.end(); ++it) out.push_back(it.key());
        return out;
    }

    const nlohmann::json& entry(const std::string& id) const {
        if (!contains(id)) throw Error("missing-prerequisite", "model " + id + " is not in the registry");
        return index_.at(id);
    }

    void put(const ModelRecord& record) {
        std::filesystem::create_directories(dir_);
        const std::string file = record.id() + ".dmb";
        save_checkpoint((dir_ / file).string(), record.network.to_named_tensors());
        const auto& p = record.provenance;
        index_[record.id()] = {{"task", p.task},
                               {"source", p.source},
                               {"balance", p.balance},
                               {"arch", p.arch},
                               {"seed", p.seed},
                               {"checkpoint", file},
                               {"input_shape", record.network.input_shape()},
                               {"parameter_count", record.network.parameter_count()},
                               {"baseline", metrics_json(record.baseline)},
                               {"validation_f1", record.validation_f1},
                               {"best_epoch", record.best_epoch}};
    }

    void flush() const {
        std::filesystem::create_directories(dir_);
        std::ofstream(dir_ / "index.json") << index_.dump(1) << '\n';
    }

    ModelRecord load(const std::string& id) const {
        const nlohmann::json& e = entry(id);
        ModelRecord r;
        r.provenance = {e.at("task"), e.at("source"), e.at("balance"), e.at("arch"), e.at("seed")};
        const Shape input = e.at("input_shape").get<Shape>();
        try {
            r.network = Model::from_named_tensors(make_architecture(r.provenance.arch), input,
                                                  load_checkpoint((dir_ / e.at("checkpoint").get<std::string>()).string()));
        } catch (const Error& err) {
            throw Error("registry-corruption", id + ": " + err.what());
        }
        r.baseline = metrics_from_json(e.at("baseline"));
        r.validation_f1 = e.at("validation_f1").get<std::vector<double>>();
        r.best_epoch = e.at("best_epoch");
        return r;
    }

private:
    std::filesystem::path dir_;
    nlohmann::json index_;
};

} // namespace dumb

#endif
