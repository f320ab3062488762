#ifndef DUMB_PIPELINE_REPORT_HPP
#define DUMB_PIPELINE_REPORT_HPP

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dumb/harness/analysis.hpp"
#include "dumb/pipeline/stages.hpp"

namespace dumb {

namespace report_detail {

inline std::string num(double v) { return format_number(v, "%.6f"); }

class CsvBundle {
public:
    CsvBundle(const std::string& hash, const std::string& header) : text_("# config_hash=" + hash + "\n" + header + "\n") {}
    template <typename... Fields>
    void row(const Fields&... fields) {
        std::string line;
        ((line += (line.empty() ? "" : ",") + to_field(fields)), ...);
        text_ += line + "\n";
    }
    const std::string& text() const { return text_; }

private:
    static std::string to_field(const std::string& s) { return s; }
    static std::string to_field(const char* s) { return s; }
    static std::string to_field(double v) { return num(v); }
    static std::string to_field(std::size_t v) { return std::to_string(v); }
    static std::string to_field(int v) { return std::to_string(v); }
    std::string text_;
};

inline nlohmann::json nullable(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

} // namespace report_detail

/// Figure bundles, baseline table and observation summary from a finished
/// matrix. Output depends only on the persisted run, so reruns are
/// byte-identical.
inline std::vector<fs::path> write_report(const RunContext& ctx) {
    using report_detail::CsvBundle;
    using report_detail::nullable;
    const RunConfig& c = ctx.config;
    if (!fs::exists(ctx.results() / "results.json")) throw Error("missing-prerequisite", "run-matrix: no result table");
    const std::vector<ExperimentCell> cells = load_results(ctx);
    if (cells.empty()) throw Error("missing-prerequisite", "run-matrix: the result table is empty");

    std::vector<fs::path> written;
    const auto emit = [&](const std::string& name, const std::string& text) {
        write_text(ctx.report() / name, text);
        written.push_back(ctx.report() / name);
    };
    nlohmann::json summary = {{"config_hash", ctx.hash}, {"cells", cells.size()}};
    std::map<std::string, std::size_t> statuses;
    for (const auto& cell : cells) ++statuses[cell.status];
    summary["status_counts"] = statuses;

    // Fig 3 / Fig 4: mean ASR per case, split by attack family
    const auto by_case = aggregate_by_case(cells);
    std::map<std::string, AttackFamily> family_of;
    for (const auto& cell : cells) family_of[cell.attack] = cell.family;
    CsvBundle fig3(ctx.hash, "task,attack,case,mean_asr,cells"), fig4(ctx.hash, "task,attack,case,mean_asr,cells");
    std::map<std::tuple<std::string, std::string, std::string>, GroupMean> family_case;  // family, task, case
    for (const auto& [key, g] : by_case) {
        const auto& [task, attack, dc] = key;
        const bool math = family_of.at(attack) == AttackFamily::Mathematical;
        (math ? fig3 : fig4).row(task, attack, case_name(dc), g.mean(), g.count);
        auto& fg = family_case[{family_name(family_of.at(attack)), task, case_name(dc)}];
        fg.sum += g.mean();
        ++fg.count;
    }
    emit("fig3_math_case_asr.csv", fig3.text());
    emit("fig4_nonmath_case_asr.csv", fig4.text());
    nlohmann::json per_case = nlohmann::json::object();
    for (const auto& [key, g] : family_case) {
        const auto& [family, task, dc] = key;
        per_case[family][task][dc] = nullable(g.mean());
    }
    summary["per_case_mean_asr"] = per_case;

    // family comparison
    nlohmann::json wins = nlohmann::json::object();
    std::map<std::string, std::pair<std::size_t, std::size_t>> totals;
    for (const auto& [key, fc] : compare_families(cells)) {
        wins[key.first][case_name(key.second)] = {{"comparisons", fc.comparisons}, {"non_math_wins", fc.non_math_wins}};
        totals[key.first].first += fc.comparisons;
        totals[key.first].second += fc.non_math_wins;
    }
    for (const auto& [task, t] : totals) wins[task]["total"] = {{"comparisons", t.first}, {"non_math_wins", t.second}};
    summary["family_wins"] = wins;

    // Fig 5: class-wise ASR over (surrogate balance, victim balance)
    CsvBundle fig5(ctx.hash, "task,src_balance,trg_balance,minority_asr,majority_asr,combined_asr,minority_n,majority_n");
    nlohmann::json class_json = nlohmann::json::object();
    for (const auto& task : c.tasks) {
        const ClassMatrices m = asr_by_class(cells, task, c.shape.balances, kPositiveClass);
        for (std::size_t i = 0; i < m.balances.size(); ++i)
            for (std::size_t j = 0; j < m.balances.size(); ++j)
                fig5.row(task, m.balances[i], m.balances[j], m.minority[i][j].rate(), m.majority[i][j].rate(), m.combined[i][j].rate(),
                         m.minority[i][j].total, m.majority[i][j].total);
        for (const char* which : {"minority", "majority"}) {
            const auto& mat = std::string(which) == "minority" ? m.minority : m.majority;
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : mat) {
                nlohmann::json row = nlohmann::json::array();
                for (const auto& v : r) row.push_back(nullable(v.rate()));
                rows.push_back(row);
            }
            class_json[task][which] = rows;
        }
        class_json[task]["balances"] = m.balances;
    }
    summary["class_matrices"] = class_json;
    emit("fig5_class_asr.csv", fig5.text());

    // Fig 6: surrogate architecture x victim architecture
    CsvBundle fig6(ctx.hash, "task,src_arch,trg_arch,mean_asr,cells");
    for (const auto& task : c.tasks)
        for (const auto& [key, g] : asr_by_architecture(cells, task)) fig6.row(task, key.first, key.second, g.mean(), g.count);
    emit("fig6_arch_asr.csv", fig6.text());

    // Fig 7: per-class tuning traces
    CsvBundle fig7(ctx.hash, "task,attack,set,class,parameter,asr,mean_ssim,samples");
    for (const auto& task : c.tasks)
        for (const auto& u : tuning_units(c, task)) {
            const nlohmann::json j = read_json(unit_path(ctx, u, ".json"), "tune-attacks");
            if (!j.contains("class_trace")) continue;
            for (const char* label : {"0", "1"})
                for (const auto& p : j.at("class_trace").at(label))
                    fig7.row(task, u.spec.name, u.set_id, std::string(label), p.at("parameter").get<double>(), p.at("asr").get<double>(),
                             p.at("mean_ssim").get<double>(), p.at("samples").get<std::size_t>());
        }
    emit("fig7_class_tuning.csv", fig7.text());

    // Fig 8: source-mismatch ASR distributions and KS tests
    CsvBundle fig8(ctx.hash, "task,trg_balance,direction,bin_lo,bin_hi,count");
    nlohmann::json ks = nlohmann::json::object();
    const std::string first = c.shape.sources.front();
    for (const auto& task : c.tasks)
        for (const auto& balance : c.shape.balances) {
            const MismatchDistributions d = mismatch_distributions(cells, balance, task, first);
            const std::size_t bins = d.forward_histogram.size();
            for (std::size_t b = 0; b < bins; ++b) {
                const double lo = static_cast<double>(b) / static_cast<double>(bins), hi = static_cast<double>(b + 1) / static_cast<double>(bins);
                fig8.row(task, balance, d.forward_label, lo, hi, d.forward_histogram[b]);
                fig8.row(task, balance, d.backward_label, lo, hi, d.backward_histogram[b]);
            }
            nlohmann::json entry = {{"forward", d.forward_label}, {"backward", d.backward_label},
                                    {"forward_n", d.forward.size()}, {"backward_n", d.backward.size()}};
            if (!d.forward.empty() && !d.backward.empty()) {
                entry["statistic"] = d.ks.statistic;
                entry["p_value"] = d.ks.p_value;
            }
            ks[task][balance] = entry;
        }
    emit("fig8_mismatch_asr.csv", fig8.text());
    summary["ks_tests"] = ks;

    // baseline table
    ModelRegistry registry(ctx.models());
    CsvBundle table3(ctx.hash, "task,source,balance,arch,parameters,precision,recall,f1,accuracy,tp,fp,tn,fn,best_epoch");
    for (const auto& task : c.tasks)
        for (const auto& p : task_models(c, task)) {
            if (!registry.contains(p.id())) continue;
            const auto& e = registry.entry(p.id());
            const Metrics m = metrics_from_json(e.at("baseline"));
            table3.row(p.task, p.source, p.balance, p.arch, e.at("parameter_count").get<std::size_t>(), m.precision, m.recall, m.f1,
                       m.accuracy, m.tp, m.fp, m.tn, m.fn, e.at("best_epoch").get<std::size_t>());
        }
    emit("table3_baseline.csv", table3.text());

    emit("summary.json", summary.dump(2) + "\n");
    return written;
}

} // namespace dumb

#endif
