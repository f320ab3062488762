#ifndef DUMB_PIPELINE_STAGES_HPP
#define DUMB_PIPELINE_STAGES_HPP

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dumb/diffcore/checkpoint.hpp"
#include "dumb/harness/experiment.hpp"
#include "dumb/models/registry.hpp"
#include "dumb/pipeline/config.hpp"
#include "dumb/synthdata/store.hpp"
#include "dumb/tuning/tune.hpp"

namespace dumb {

namespace fs = std::filesystem;

using Logger = std::function<void(const std::string&)>;

inline Logger stderr_logger() {
    auto mtx = std::make_shared<std::mutex>();
    return [mtx](const std::string& msg) {
        std::lock_guard lock(*mtx);
        std::cerr << "[dumb] " << msg << std::endl;
    };
}

/// A run directory bound to one effective config.
struct RunContext {
    RunConfig config;
    fs::path root;
    std::string hash;
    Logger log = [](const std::string&) {};

    fs::path data() const { return root / "data"; }
    fs::path models() const { return root / "models"; }
    fs::path tuning() const { return root / "tuning"; }
    fs::path results() const { return root / "results"; }
    fs::path report() const { return root / "report"; }
};

/// `<output>/run-<hash>/`, created on first use with the effective config.
inline RunContext open_run(const RunConfig& config, Logger log = {}) {
    config.validate_config();
    RunContext ctx;
    ctx.config = config;
    ctx.hash = config.hash();
    ctx.root = fs::path(config.output) / ("run-" + ctx.hash);
    if (log) ctx.log = std::move(log);
    fs::create_directories(ctx.root);
    const fs::path cfg = ctx.root / "config.json";
    if (!fs::exists(cfg)) {
        nlohmann::json j = config.to_json(false);
        j["config_hash"] = ctx.hash;
        std::ofstream(cfg) << j.dump(2) << '\n';
    }
    return ctx;
}

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mtx;
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            {
                std::lock_guard lock(mtx);
                if (failure) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mtx);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(n, 1)); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::vector<std::string> select_or_all(const std::vector<std::string>& all, const std::optional<std::string>& only) {
    if (!only) return all;
    if (std::find(all.begin(), all.end(), *only) == all.end()) throw Error("config-error", *only + " is not part of the config");
    return {*only};
}

inline void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        f << text;
        if (!f) throw Error("io-error", "cannot write " + path.string());
    }
    fs::rename(tmp, path);
}

inline nlohmann::json read_json(const fs::path& path, const std::string& stage) {
    std::ifstream f(path);
    if (!f) throw Error("missing-prerequisite", stage + ": " + path.string() + " not found");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("registry-corruption", path.string() + ": " + e.what());
    }
}

// ---- data -------------------------------------------------------------------

inline std::uint64_t split_seed(const RunConfig& c, const std::string& task, const std::string& source) {
    return derive_seed(c.seed, "split/" + task + "/" + source);
}

/// Generate, deduplicate and split the synthetic dataset of every selected
/// (task, source). Existing datasets are kept.
inline std::size_t gen_data(const RunContext& ctx, const std::optional<std::string>& task = {},
                            const std::optional<std::string>& source = {}) {
    const RunConfig& c = ctx.config;
    std::size_t made = 0;
    for (const auto& t : select_or_all(c.tasks, task))
        for (const auto& s : select_or_all(c.shape.sources, source)) {
            if (dataset_exists(ctx.data(), t, s)) {
                ctx.log("gen-data: " + t + "/" + s + " already present");
                continue;
            }
            auto images = deduplicate(generate_dataset(make_task(t, c.image_size), make_source(s), c.seed, c.per_class));
            DatasetSplit sp = split(images, c.split_ratios, split_seed(c, t, s));
            sp.provenance = {t, s, c.seed};
            save_dataset(ctx.data(), sp,
                         {{"origin", "synthetic"}, {"per_class", c.per_class}, {"image_size", c.image_size}, {"config_hash", ctx.hash}});
            ctx.log("gen-data: " + t + "/" + s + " train " + std::to_string(sp.train.size()) + ", validation " +
                    std::to_string(sp.validation.size()) + ", test " + std::to_string(sp.test.size()));
            ++made;
        }
    return made;
}

/// Replace the dataset of (task, source) with images from `path/<class>/*.png`.
inline void ingest(const RunContext& ctx, const fs::path& path, const std::string& task, const std::string& source) {
    const RunConfig& c = ctx.config;
    select_or_all(c.tasks, task);
    select_or_all(c.shape.sources, source);
    ModelRegistry registry(ctx.models());
    for (const auto& id : registry.ids()) {
        const auto& e = registry.entry(id);
        if (e.at("task") == task && e.at("source") == source) {
            throw Error("config-error", "models trained on " + task + "/" + source + " already exist in this run");
        }
    }
    const TaskSpec spec = make_task(task, c.image_size);
    auto images = deduplicate(ingest_folder(path, spec.class_names, c.image_size));
    DatasetSplit sp = split(images, c.split_ratios, split_seed(c, task, source));
    sp.provenance = {task, source, c.seed};
    save_dataset(ctx.data(), sp, {{"origin", "ingested"}, {"path", fs::absolute(path).string()}, {"config_hash", ctx.hash}});
    ctx.log("ingest: " + task + "/" + source + " " + std::to_string(images.size()) + " images");
}

// ---- models -----------------------------------------------------------------

inline std::vector<ModelProvenance> task_models(const RunConfig& c, const std::string& task) {
    std::vector<ModelProvenance> out;
    for (const auto& s : c.shape.sources)
        for (const auto& b : c.shape.balances)
            for (const auto& a : c.shape.archs) {
                ModelProvenance p{task, s, b, a, 0};
                p.seed = derive_seed(c.seed, "model/" + p.id());
                out.push_back(p);
            }
    return out;
}

/// Train every missing model of the selected tasks.
inline std::size_t train_all(const RunContext& ctx, const std::optional<std::string>& task = {}) {
    const RunConfig& c = ctx.config;
    ModelRegistry registry(ctx.models());
    std::mutex mtx;
    std::size_t trained = 0;
    for (const auto& t : select_or_all(c.tasks, task)) {
        std::map<std::string, DatasetSplit> splits;
        for (const auto& s : c.shape.sources) {
            if (!dataset_exists(ctx.data(), t, s)) throw Error("missing-prerequisite", "gen-data: no dataset for " + t + "/" + s);
            splits[s] = load_dataset(ctx.data(), t, s);
        }
        std::vector<ModelProvenance> todo;
        for (const auto& p : task_models(c, t))
            if (!registry.contains(p.id())) todo.push_back(p);
        parallel_for(todo.size(), c.jobs, [&](std::size_t i) {
            const ModelProvenance& p = todo[i];
            DatasetSplit sp = splits.at(p.source);
            sp.train = rebalance(sp.train, balance_level(p.balance), kPositiveClass, derive_seed(p.seed, "rebalance"));
            TrainingConfig tc = c.training;
            tc.seed = p.seed;
            ModelRecord rec = train(make_architecture(p.arch), sp, p, tc);
            std::lock_guard lock(mtx);
            registry.put(rec);
            registry.flush();
            ++trained;
            const auto counts = class_counts(sp.train);
            ctx.log("train-all: " + p.id() + " (train " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) +
                    ") test F1 " + format_number(rec.baseline.f1, "%.4f") + " best epoch " + std::to_string(rec.best_epoch));
        });
    }
    registry.flush();
    return trained;
}

inline std::map<std::string, Model> load_task_models(const RunContext& ctx, const std::string& task) {
    ModelRegistry registry(ctx.models());
    std::vector<std::string> missing;
    for (const auto& p : task_models(ctx.config, task))
        if (!registry.contains(p.id())) missing.push_back(p.id());
    if (!missing.empty()) {
        throw Error("missing-prerequisite", "train-all: " + std::to_string(missing.size()) + " models missing for task " + task +
                                                " (first: " + missing.front() + ")");
    }
    std::map<std::string, Model> out;
    for (const auto& p : task_models(ctx.config, task)) out.emplace(p.id(), registry.load(p.id()).network);
    return out;
}

// ---- tuning -----------------------------------------------------------------

/// One tuned adversarial sample set: an (attack, surrogate model) pair for
/// mathematical attacks, an (attack, source dataset) pair otherwise.
struct TuningUnit {
    std::string task;
    AttackSpec spec;
    std::string set_id;                   // model id or dataset id
    std::string source;
    std::vector<std::string> evaluators;  // first one generates
};

inline std::vector<TuningUnit> tuning_units(const RunConfig& c, const std::string& task) {
    std::vector<TuningUnit> out;
    const auto models = task_models(c, task);
    for (const auto& spec : c.attack_specs()) {
        if (spec.mathematical()) {
            for (const auto& m : models) out.push_back({task, spec, m.id(), m.source, {m.id()}});
        } else {
            for (const auto& s : c.shape.sources) {
                TuningUnit u{task, spec, dataset_id(task, s), s, {}};
                u.evaluators.push_back(ModelProvenance{task, s, c.shape.reference_balance(), c.shape.reference_arch(), 0}.id());
                out.push_back(std::move(u));
            }
        }
    }
    return out;
}

inline fs::path unit_path(const RunContext& ctx, const TuningUnit& u, const char* ext) {
    return ctx.tuning() / u.task / u.spec.name / (u.set_id + ext);
}

inline nlohmann::json trace_json(const std::vector<TracePoint>& trace) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : trace)
        arr.push_back({{"parameter", p.parameter},
                       {"asr", p.asr},
                       {"mean_ssim", p.mean_ssim},
                       {"fooled", p.fooled},
                       {"sample_fooled", p.sample_fooled},
                       {"sample_ssim", p.sample_ssim}});
    return arr;
}

inline nlohmann::json class_trace_json(const TuningResult& r, int label) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : class_trace(r, label))
        arr.push_back({{"parameter", p.parameter}, {"asr", p.asr}, {"mean_ssim", p.mean_ssim}, {"samples", p.samples}});
    return arr;
}

/// Tune every pending unit of the selected tasks and persist its sample set.
inline std::size_t tune_attacks(const RunContext& ctx, const std::optional<std::string>& task = {}) {
    const RunConfig& c = ctx.config;
    const TuningConfig tcfg = c.tuning_config();
    std::size_t done = 0;
    std::mutex mtx;
    for (const auto& t : select_or_all(c.tasks, task)) {
        const auto models = load_task_models(ctx, t);
        std::map<std::string, std::vector<LabeledImage>> tests;
        for (const auto& s : c.shape.sources) tests[s] = load_dataset(ctx.data(), t, s).test;
        std::vector<TuningUnit> todo;
        for (auto& u : tuning_units(c, t))
            if (!fs::exists(unit_path(ctx, u, ".json"))) todo.push_back(std::move(u));
        ctx.log("tune-attacks: " + t + " " + std::to_string(todo.size()) + " sample sets to tune");
        parallel_for(todo.size(), c.jobs, [&](std::size_t i) {
            const TuningUnit& u = todo[i];
            std::vector<const Model*> evaluators;
            for (const auto& id : u.evaluators) evaluators.push_back(&models.at(id));
            nlohmann::json j = {{"config_hash", ctx.hash},
                                {"task", u.task},
                                {"attack", u.spec.name},
                                {"family", family_name(u.spec.family)},
                                {"set_id", u.set_id},
                                {"evaluators", u.evaluators},
                                {"alpha", tcfg.alpha},
                                {"hyper", u.spec.hyper},
                                {"seed", tcfg.seed}};
            if (u.spec.grid) j["grid"] = {{"min", u.spec.grid->min}, {"max", u.spec.grid->max}, {"step", u.spec.grid->step}};
            std::vector<LabeledImage> samples;
            try {
                samples = select_eval_set(evaluators, tests.at(u.source), c.eval_samples, derive_seed(c.seed, "eval/" + u.set_id));
            } catch (const Error& e) {
                if (e.code() != "eval-pool-exhausted") throw;
                j["status"] = e.code();
                j["detail"] = e.what();
                write_text(unit_path(ctx, u, ".json"), j.dump(1) + "\n");
                std::lock_guard lock(mtx);
                ++done;
                ctx.log("tune-attacks: " + u.spec.name + " on " + u.set_id + ": " + e.what());
                return;
            }
            const TuningResult r = tune(u.spec, evaluators, samples, tcfg);
            j["status"] = r.status();
            j["feasible"] = r.feasible;
            j["gamma"] = r.feasible ? nlohmann::json(r.gamma) : nlohmann::json(nullptr);
            j["gamma_index"] = r.gamma_index;
            j["labels"] = r.labels;
            nlohmann::json hashes = nlohmann::json::array();
            for (const auto& s : samples) hashes.push_back(content_hash(s.image));
            j["sample_hashes"] = hashes;
            j["trace"] = trace_json(r.trace);
            j["class_trace"] = {{"0", class_trace_json(r, 0)}, {"1", class_trace_json(r, 1)}};
            if (r.feasible) {
                j["asr"] = r.trace[r.gamma_index].asr;
                j["mean_ssim"] = r.trace[r.gamma_index].mean_ssim;
                NamedTensors tensors;
                for (std::size_t k = 0; k < samples.size(); ++k) {
                    tensors.emplace_back("orig/" + std::to_string(k), samples[k].image);
                    tensors.emplace_back("adv/" + std::to_string(k), r.adversarials[k]);
                }
                fs::create_directories(unit_path(ctx, u, ".dmb").parent_path());
                save_checkpoint(unit_path(ctx, u, ".dmb").string(), tensors);
                if (c.export_png) {
                    const fs::path dir = unit_path(ctx, u, "_png");
                    fs::create_directories(dir);
                    for (std::size_t k = 0; k < samples.size(); ++k) {
                        char name[32];
                        std::snprintf(name, sizeof name, "%03zu_c%d", k, samples[k].label);
                        write_png((dir / (std::string(name) + "_orig.png")).string(), samples[k].image);
                        write_png((dir / (std::string(name) + "_adv.png")).string(), r.adversarials[k]);
                    }
                }
            }
            write_text(unit_path(ctx, u, ".json"), j.dump(1) + "\n");
            std::lock_guard lock(mtx);
            ++done;
            ctx.log("tune-attacks: " + u.spec.name + " on " + u.set_id + " gamma " + format_number(r.gamma, "%.4g") + " asr " +
                    (r.feasible ? format_number(r.trace[r.gamma_index].asr, "%.3f") : std::string("-")));
        });
    }
    return done;
}

inline AdversarialSet load_adversarial_set(const RunContext& ctx, const TuningUnit& u) {
    const nlohmann::json j = read_json(unit_path(ctx, u, ".json"), "tune-attacks");
    AdversarialSet set;
    set.status = j.at("status");
    set.seed = j.at("seed");
    if (set.status != "ok") return set;
    set.gamma = j.at("gamma");
    set.labels = j.at("labels").get<std::vector<int>>();
    const NamedTensors tensors = load_checkpoint(unit_path(ctx, u, ".dmb").string());
    for (const auto& [name, tensor] : tensors)
        if (name.rfind("adv/", 0) == 0) set.adversarials.push_back(tensor);
    if (set.adversarials.size() != set.labels.size()) throw Error("registry-corruption", "sample set " + u.set_id + " is incomplete");
    return set;
}

// ---- matrix -----------------------------------------------------------------

inline nlohmann::json cell_json(const ExperimentCell& c) {
    return {{"key", c.key()},       {"task", c.task},   {"attack", c.attack},     {"family", family_name(c.family)},
            {"src", c.src_id()},    {"trg", c.trg_id()}, {"case", case_name(c.dumb_case)},
            {"status", c.status},   {"asr", c.ok() ? nlohmann::json(c.asr) : nlohmann::json(nullptr)},
            {"n", c.n},             {"gamma", std::isnan(c.gamma) ? nlohmann::json(nullptr) : nlohmann::json(c.gamma)},
            {"seed", c.seed},       {"outcomes", c.outcomes}, {"labels", c.labels}};
}

inline void apply_cell_json(ExperimentCell& c, const nlohmann::json& j) {
    c.status = j.at("status");
    c.asr = j.at("asr").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("asr").get<double>();
    c.n = j.at("n");
    c.gamma = j.at("gamma").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("gamma").get<double>();
    c.seed = j.at("seed");
    c.outcomes = j.at("outcomes");
    c.labels = j.at("labels").get<std::vector<int>>();
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Evaluate every cell of the matrix. Completed cells are appended to
/// results/cells.jsonl; with `resume` those are reused instead of recomputed.
inline std::vector<ExperimentCell> run_matrix(const RunContext& ctx, bool resume = false) {
    const RunConfig& c = ctx.config;
    const std::string started = utc_now();
    const fs::path journal = ctx.results() / "cells.jsonl";
    fs::create_directories(ctx.results());

    // prerequisites first, so nothing is written when a stage is missing
    for (const auto& t : c.tasks) {
        ModelRegistry registry(ctx.models());
        for (const auto& p : task_models(c, t))
            if (!registry.contains(p.id())) throw Error("missing-prerequisite", "train-all: model " + p.id() + " missing");
        for (const auto& u : tuning_units(c, t))
            if (!fs::exists(unit_path(ctx, u, ".json")))
                throw Error("missing-prerequisite", "tune-attacks: " + u.spec.name + " on " + u.set_id + " not tuned");
    }

    std::map<std::string, nlohmann::json> finished;
    if (resume && fs::exists(journal)) {
        std::ifstream f(journal);
        for (std::string line; std::getline(f, line);) {
            try {
                auto j = nlohmann::json::parse(line);
                finished[j.at("key").get<std::string>()] = std::move(j);
            } catch (const nlohmann::json::exception&) {
                // torn last line of an interrupted run
            }
        }
        ctx.log("run-matrix: resuming with " + std::to_string(finished.size()) + " completed cells");
    }
    std::ofstream out(journal, resume ? std::ios::app : std::ios::trunc);

    std::vector<ExperimentCell> all;
    for (const auto& t : c.tasks) {
        const auto models = load_task_models(ctx, t);
        std::vector<ModelProvenance> provenances = task_models(c, t);
        std::vector<ExperimentCell> cells = build_matrix(t, provenances, c.attack_specs(), c.shape);
        std::size_t pending = 0;
        for (auto& cell : cells) {
            const auto it = finished.find(cell.key());
            if (it != finished.end()) apply_cell_json(cell, it->second);
            else ++pending;
        }
        std::map<std::string, AdversarialSet> sets;
        if (pending > 0)
            for (const auto& u : tuning_units(c, t)) sets.emplace(u.spec.name + "|" + u.set_id, load_adversarial_set(ctx, u));
        ctx.log("run-matrix: " + t + " " + std::to_string(cells.size()) + " cells, " + std::to_string(pending) + " pending");
        std::size_t completed = 0;
        run_cells(
            cells,
            [&](const ExperimentCell& cell) -> const AdversarialSet* {
                const auto it = sets.find(cell.attack + "|" + cell.src_id());
                return it == sets.end() ? nullptr : &it->second;
            },
            [&](const std::string& id) -> const Model* {
                const auto it = models.find(id);
                return it == models.end() ? nullptr : &it->second;
            },
            c.jobs,
            [&](const ExperimentCell& cell) {
                out << cell_json(cell).dump() << '\n';
                if (++completed % 1000 == 0) {
                    out.flush();
                    ctx.log("run-matrix: " + t + " " + std::to_string(completed) + "/" + std::to_string(pending));
                }
            });
        out.flush();
        all.insert(all.end(), std::make_move_iterator(cells.begin()), std::make_move_iterator(cells.end()));
    }

    write_text(ctx.results() / "results.csv", to_csv(all, ctx.hash));
    nlohmann::json table = {{"config_hash", ctx.hash},
                            {"seed", c.seed},
                            {"attack_seed", c.tuning_config().seed},
                            {"cell_count", all.size()},
                            {"cells", nlohmann::json::array()}};
    for (const auto& cell : all) {
        nlohmann::json j = cell_json(cell);
        j.erase("key");
        table["cells"].push_back(std::move(j));
    }
    write_text(ctx.results() / "results.json", table.dump() + "\n");
    write_text(ctx.results() / "run_meta.json",
               nlohmann::json{{"config_hash", ctx.hash}, {"started", started}, {"finished", utc_now()}, {"jobs", c.jobs}, {"resumed", resume}}
                       .dump(1) +
                   "\n");
    ctx.log("run-matrix: wrote " + std::to_string(all.size()) + " rows");
    return all;
}

/// Cells as persisted by run-matrix, including per-sample outcomes.
inline std::vector<ExperimentCell> load_results(const RunContext& ctx) {
    const nlohmann::json table = read_json(ctx.results() / "results.json", "run-matrix");
    std::vector<ExperimentCell> cells;
    for (const auto& j : table.at("cells")) {
        ExperimentCell c;
        c.task = j.at("task");
        c.attack = j.at("attack");
        c.family = j.at("family") == "mathematical" ? AttackFamily::Mathematical : AttackFamily::NonMathematical;
        c.src = parse_model_id(j.at("src"), ctx.config.shape.reference_balance());
        c.trg = parse_model_id(j.at("trg"), ctx.config.shape.reference_balance());
        c.dumb_case = parse_case(j.at("case"));
        apply_cell_json(c, j);
        cells.push_back(std::move(c));
    }
    return cells;
}

} // namespace dumb

#endif
