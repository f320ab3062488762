#ifndef DUMB_SYNTHDATA_STORE_HPP
#define DUMB_SYNTHDATA_STORE_HPP

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dumb/synthdata/image_io.hpp"

namespace dumb {

// Dataset manifest: JSON listing provenance, per-split class counts and the
// content hash + label of every member. Pixels live in a shared
// content-addressed PNG cache: <root>/images/<hash>.png.

inline std::filesystem::path dataset_dir(const std::filesystem::path& root, const std::string& task,
                                         const std::string& source) {
    return root / (task + "_" + source);
}

inline nlohmann::json split_members_json(const std::vector<LabeledImage>& items) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& item : items) arr.push_back({{"hash", content_hash(item.image)}, {"label", item.label}});
    return arr;
}

inline void save_dataset(const std::filesystem::path& root, const DatasetSplit& split, const nlohmann::json& extra = {}) {
    namespace fs = std::filesystem;
    const fs::path images = root / "images";
    fs::create_directories(images);
    const fs::path dir = dataset_dir(root, split.provenance.task, split.provenance.source);
    fs::create_directories(dir);
    nlohmann::json manifest = {{"task", split.provenance.task},
                               {"source", split.provenance.source},
                               {"seed", split.provenance.seed}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    nlohmann::json counts, splits;
    const std::pair<const char*, const std::vector<LabeledImage>*> parts[] = {
        {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
    for (const auto& [name, items] : parts) {
        const auto c = class_counts(*items);
        counts[name] = {c[0], c[1]};
        splits[name] = split_members_json(*items);
        for (const auto& item : *items) {
            const fs::path file = images / (content_hash(item.image) + ".png");
            if (!fs::exists(file)) write_png(file.string(), item.image);
        }
    }
    manifest["counts"] = counts;
    manifest["splits"] = splits;
    std::ofstream(dir / "manifest.json") << manifest.dump(1) << '\n';
}

inline bool dataset_exists(const std::filesystem::path& root, const std::string& task, const std::string& source) {
    return std::filesystem::exists(dataset_dir(root, task, source) / "manifest.json");
}

inline nlohmann::json load_manifest(const std::filesystem::path& root, const std::string& task, const std::string& source) {
    const auto path = dataset_dir(root, task, source) / "manifest.json";
    std::ifstream f(path);
    if (!f) throw Error("missing-prerequisite", "dataset manifest " + path.string());
    return nlohmann::json::parse(f);
}

inline DatasetSplit load_dataset(const std::filesystem::path& root, const std::string& task, const std::string& source) {
    const nlohmann::json manifest = load_manifest(root, task, source);
    DatasetSplit split;
    split.provenance = {manifest.at("task"), manifest.at("source"), manifest.at("seed")};
    const auto load = [&](const char* name, std::vector<LabeledImage>& items) {
        for (const auto& member : manifest.at("splits").at(name)) {
            const std::string hash = member.at("hash");
            Image img = read_png((root / "images" / (hash + ".png")).string());
            if (content_hash(img) != hash) throw Error("registry-corruption", "image " + hash + " fails its hash");
            items.push_back({std::move(img), member.at("label").get<int>()});
        }
    };
    load("train", split.train);
    load("validation", split.validation);
    load("test", split.test);
    return split;
}

} // namespace dumb

#endif
