#ifndef DUMB_HARNESS_EXPERIMENT_HPP
#define DUMB_HARNESS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dumb/attacks/spec.hpp"
#include "dumb/harness/cases.hpp"

namespace dumb {

/// Axes of the model matrix for one task.
struct MatrixShape {
    std::vector<std::string> sources{"A", "B"};
    std::vector<std::string> balances{"balanced", "weak", "medium", "strong"};
    std::vector<std::string> archs{"arch-S", "arch-M", "arch-L"};

    std::size_t models_per_task() const { return sources.size() * balances.size() * archs.size(); }
    /// Balance level and architecture of the reference model that tunes
    /// model-free attacks on each source.
    const std::string& reference_balance() const { return balances.front(); }
    const std::string& reference_arch() const { return archs.at(archs.size() / 2); }
};

/// Provenance of a model-free sample set: the source dataset it was drawn from.
inline ModelProvenance dataset_provenance(const std::string& task, const std::string& source,
                                          const MatrixShape& shape, std::uint64_t seed = 0) {
    return {task, source, shape.reference_balance(), shape.reference_arch(), seed};
}

inline std::string dataset_id(const std::string& task, const std::string& source) { return task + "-" + source + "-data"; }

struct ExperimentCell {
    std::string task;
    std::string attack;
    AttackFamily family = AttackFamily::Mathematical;
    ModelProvenance src;   // surrogate model, or the source dataset for model-free attacks
    ModelProvenance trg;   // victim model
    DumbCase dumb_case = DumbCase::C1;

    std::string status = "pending";  // ok | constraint-infeasible | eval-pool-exhausted | ...
    double asr = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    std::string outcomes;     // per sample, '1' when the victim was fooled
    std::vector<int> labels;  // true class per sample

    bool ok() const { return status == "ok"; }
    std::string src_id() const { return family == AttackFamily::Mathematical ? src.id() : dataset_id(src.task, src.source); }
    std::string trg_id() const { return trg.id(); }
    std::string key() const { return task + "|" + attack + "|" + src_id() + "|" + trg_id(); }
};

/// Pending cells for one task: every ordered (surrogate, victim) pair for
/// mathematical attacks; every (source dataset, victim) pair for model-free
/// attacks. `models` must be exactly the product grid of `shape` for `task`.
inline std::vector<ExperimentCell> build_matrix(const std::string& task, const std::vector<ModelProvenance>& models,
                                                const std::vector<AttackSpec>& attacks, const MatrixShape& shape = {}) {
    if (models.size() != shape.models_per_task()) {
        throw Error("matrix-error", "task " + task + " has " + std::to_string(models.size()) + " models, expected " +
                                        std::to_string(shape.models_per_task()));
    }
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& m : models) {
        const auto in = [](const std::vector<std::string>& v, const std::string& s) {
            return std::find(v.begin(), v.end(), s) != v.end();
        };
        if (m.task != task || !in(shape.sources, m.source) || !in(shape.balances, m.balance) || !in(shape.archs, m.arch) ||
            !seen.emplace(m.source, m.balance, m.arch).second) {
            throw Error("matrix-error", "model " + m.id() + " does not fit the matrix of task " + task);
        }
    }
    std::vector<ExperimentCell> cells;
    for (const auto& attack : attacks) {
        if (attack.mathematical()) {
            for (const auto& src : models)
                for (const auto& trg : models) {
                    ExperimentCell c;
                    c.task = task;
                    c.attack = attack.name;
                    c.family = attack.family;
                    c.src = src;
                    c.trg = trg;
                    c.dumb_case = classify_case(src, trg);
                    cells.push_back(std::move(c));
                }
        } else {
            for (const auto& source : shape.sources)
                for (const auto& trg : models) {
                    ExperimentCell c;
                    c.task = task;
                    c.attack = attack.name;
                    c.family = attack.family;
                    c.src = dataset_provenance(task, source, shape, trg.seed);
                    c.trg = trg;
                    c.dumb_case = classify_transfer_case(task, source, shape.reference_arch(), shape.reference_balance(), trg);
                    cells.push_back(std::move(c));
                }
        }
    }
    return cells;
}

/// Seeded, class-balanced draw of n test samples that every model in
/// `judges` classifies correctly.
inline std::vector<LabeledImage> select_eval_set(const std::vector<const Model*>& judges,
                                                 const std::vector<LabeledImage>& test_split, std::size_t n,
                                                 std::uint64_t seed) {
    if (n == 0 || n % 2 != 0) throw Error("config-error", "eval set size must be a positive even number");
    std::vector<std::size_t> chosen;
    for (int label = 0; label < 2; ++label) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < test_split.size(); ++i)
            if (test_split[i].label == label) pool.push_back(i);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(pool);
        std::size_t taken = 0;
        for (std::size_t i : pool) {
            if (taken == n / 2) break;
            const bool correct = std::all_of(judges.begin(), judges.end(), [&](const Model* m) {
                return predict_label(*m, test_split[i].image) == label;
            });
            if (correct) {
                chosen.push_back(i);
                ++taken;
            }
        }
        if (taken < n / 2) {
            throw Error("eval-pool-exhausted", "class " + std::to_string(label) + " has only " + std::to_string(taken) +
                                                   " correctly classified test samples, need " + std::to_string(n / 2));
        }
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<LabeledImage> out;
    for (std::size_t i : chosen) out.push_back(test_split[i]);
    return out;
}

/// An adversarial sample set ready for transfer evaluation.
struct AdversarialSet {
    std::string status = "ok";  // anything else is copied into every dependent cell
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    std::vector<int> labels;
    std::vector<Image> adversarials;
};

using SetLookup = std::function<const AdversarialSet*(const ExperimentCell&)>;
using ModelLookup = std::function<const Model*(const std::string& id)>;

/// Evaluate one cell against its victim.
inline void evaluate_cell(ExperimentCell& cell, const AdversarialSet& set, const Model& victim) {
    cell.gamma = set.gamma;
    cell.seed = set.seed;
    if (set.status != "ok") {
        cell.status = set.status;
        return;
    }
    cell.labels = set.labels;
    cell.n = set.labels.size();
    cell.outcomes.assign(cell.n, '0');
    std::size_t fooled = 0;
    for (std::size_t i = 0; i < cell.n; ++i) {
        if (predict_label(victim, set.adversarials[i]) != set.labels[i]) {
            cell.outcomes[i] = '1';
            ++fooled;
        }
    }
    cell.asr = cell.n ? static_cast<double>(fooled) / static_cast<double>(cell.n) : 0.0;
    cell.status = "ok";
}

/// Fill every pending cell. Cells are independent; `jobs` workers pull them
/// from a shared counter and each completed cell is handed to `on_done` under
/// a single lock. Cell-level failures are recorded in the row.
inline void run_cells(std::vector<ExperimentCell>& cells, const SetLookup& sets, const ModelLookup& models, std::size_t jobs,
                      const std::function<void(const ExperimentCell&)>& on_done = {}) {
    std::atomic<std::size_t> next{0};
    std::mutex writer;
    const auto work = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            ExperimentCell& cell = cells[i];
            if (cell.status != "pending") continue;
            try {
                const AdversarialSet* set = sets(cell);
                const Model* victim = models(cell.trg_id());
                if (!set || !victim) throw Error("missing-prerequisite", "no sample set or victim for " + cell.key());
                evaluate_cell(cell, *set, *victim);
            } catch (const Error& e) {
                cell.status = e.code();
            }
            if (on_done) {
                std::lock_guard lock(writer);
                on_done(cell);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::max<std::size_t>(jobs, 1); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

// ---- CSV ------------------------------------------------------------------

inline const char* kResultCsvHeader = "task,attack,family,src,trg,case,asr,n,gamma,seed,status";

inline std::string format_number(double v, const char* fmt = "%.10g") {
    if (std::isnan(v)) return "";
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

/// One row per cell. A non-empty `config_hash` is written as a leading
/// `# config_hash=` comment line.
inline std::string to_csv(const std::vector<ExperimentCell>& cells, const std::string& config_hash = "") {
    std::string out = config_hash.empty() ? "" : "# config_hash=" + config_hash + "\n";
    out += std::string(kResultCsvHeader) + "\n";
    for (const auto& c : cells) {
        out += c.task + "," + c.attack + "," + family_name(c.family) + "," + c.src_id() + "," + c.trg_id() + "," +
               case_name(c.dumb_case) + "," + format_number(c.asr) + "," + std::to_string(c.n) + "," +
               format_number(c.gamma, "%.6g") + "," + std::to_string(c.seed) + "," + c.status + "\n";
    }
    return out;
}

/// Inverse of ModelProvenance::id() and dataset_id().
inline ModelProvenance parse_model_id(const std::string& id, const std::string& reference_balance = "balanced") {
    std::vector<std::string> parts;
    std::stringstream ss(id);
    for (std::string tok; std::getline(ss, tok, '-');) parts.push_back(tok);
    if (parts.size() == 3 && parts[2] == "data") return {parts[0], parts[1], reference_balance, "*", 0};
    if (parts.size() < 4) throw Error("registry-corruption", "unparseable model id " + id);
    std::string arch = parts[3];
    for (std::size_t i = 4; i < parts.size(); ++i) arch += "-" + parts[i];
    return {parts[0], parts[1], parts[2], arch, 0};
}

inline std::vector<ExperimentCell> from_csv(const std::string& text) {
    std::vector<ExperimentCell> cells;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    }
    if (line != kResultCsvHeader) throw Error("registry-corruption", "unexpected results header");
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 11) throw Error("registry-corruption", "bad results row: " + line);
        ExperimentCell c;
        c.task = f[0];
        c.attack = f[1];
        c.family = f[2] == "mathematical" ? AttackFamily::Mathematical : AttackFamily::NonMathematical;
        c.src = parse_model_id(f[3]);
        c.trg = parse_model_id(f[4]);
        c.dumb_case = parse_case(f[5]);
        c.asr = f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[6]);
        c.n = std::stoul(f[7]);
        c.gamma = f[8].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[8]);
        c.seed = std::stoull(f[9]);
        c.status = f[10];
        cells.push_back(std::move(c));
    }
    return cells;
}

} // namespace dumb

#endif
