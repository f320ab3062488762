#ifndef DUMB_HARNESS_ANALYSIS_HPP
#define DUMB_HARNESS_ANALYSIS_HPP

#include <array>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dumb/harness/experiment.hpp"
#include "dumb/harness/ks.hpp"

namespace dumb {

struct GroupMean {
    double sum = 0.0;
    std::size_t count = 0;
    double mean() const { return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN(); }
};

using CaseKey = std::tuple<std::string, std::string, DumbCase>;  // task, attack, case

/// Mean ASR per (task, attack, case) over completed cells.
inline std::map<CaseKey, GroupMean> aggregate_by_case(const std::vector<ExperimentCell>& cells) {
    std::map<CaseKey, GroupMean> out;
    for (const auto& c : cells) {
        if (!c.ok()) continue;
        auto& g = out[{c.task, c.attack, c.dumb_case}];
        g.sum += c.asr;
        ++g.count;
    }
    return out;
}

struct FamilyComparison {
    std::size_t comparisons = 0;       // (math, non-math) pairs with both means defined
    std::size_t non_math_wins = 0;     // strict: non-math mean > math mean
};

/// For every (task, case): how often a model-free attack's mean ASR strictly
/// beats a mathematical attack's.
inline std::map<std::pair<std::string, DumbCase>, FamilyComparison> compare_families(const std::vector<ExperimentCell>& cells) {
    const auto means = aggregate_by_case(cells);
    std::map<std::string, std::set<std::string>> math, other;
    std::set<std::string> tasks;
    for (const auto& c : cells) {
        tasks.insert(c.task);
        (c.family == AttackFamily::Mathematical ? math : other)[c.task].insert(c.attack);
    }
    std::map<std::pair<std::string, DumbCase>, FamilyComparison> out;
    for (const auto& task : tasks)
        for (DumbCase dc : kAllCases) {
            FamilyComparison& fc = out[{task, dc}];
            for (const auto& m : math[task])
                for (const auto& o : other[task]) {
                    const auto im = means.find({task, m, dc});
                    const auto io = means.find({task, o, dc});
                    if (im == means.end() || io == means.end()) continue;
                    ++fc.comparisons;
                    if (io->second.mean() > im->second.mean()) ++fc.non_math_wins;
                }
        }
    return out;
}

struct ClassAsr {
    std::size_t fooled = 0, total = 0;
    double rate() const { return total ? static_cast<double>(fooled) / static_cast<double>(total) : std::numeric_limits<double>::quiet_NaN(); }
};

/// [source balance][target balance] pooled per-class ASR for one task and one
/// true class, over completed cells of the given family with outcomes kept.
struct ClassMatrices {
    std::vector<std::string> balances;
    std::vector<std::vector<ClassAsr>> minority, majority, combined;
};

inline ClassMatrices asr_by_class(const std::vector<ExperimentCell>& cells, const std::string& task,
                                  const std::vector<std::string>& balances, int minority_class = 0,
                                  AttackFamily family = AttackFamily::Mathematical) {
    ClassMatrices m;
    m.balances = balances;
    const std::size_t k = balances.size();
    m.minority.assign(k, std::vector<ClassAsr>(k));
    m.majority = m.combined = m.minority;
    const auto index = [&](const std::string& b) {
        return static_cast<std::size_t>(std::find(balances.begin(), balances.end(), b) - balances.begin());
    };
    for (const auto& c : cells) {
        if (!c.ok() || c.task != task || c.family != family) continue;
        const std::size_t si = index(c.src.balance), ti = index(c.trg.balance);
        if (si >= k || ti >= k) continue;
        for (std::size_t i = 0; i < c.labels.size(); ++i) {
            const bool fooled = c.outcomes[i] == '1';
            ClassAsr& cls = c.labels[i] == minority_class ? m.minority[si][ti] : m.majority[si][ti];
            cls.fooled += fooled;
            ++cls.total;
            m.combined[si][ti].fooled += fooled;
            ++m.combined[si][ti].total;
        }
    }
    return m;
}

/// Mean ASR per (surrogate arch, victim arch) over completed mathematical cells of a task.
inline std::map<std::pair<std::string, std::string>, GroupMean> asr_by_architecture(const std::vector<ExperimentCell>& cells,
                                                                                    const std::string& task) {
    std::map<std::pair<std::string, std::string>, GroupMean> out;
    for (const auto& c : cells) {
        if (!c.ok() || c.task != task || c.family != AttackFamily::Mathematical) continue;
        auto& g = out[{c.src.arch, c.trg.arch}];
        g.sum += c.asr;
        ++g.count;
    }
    return out;
}

struct MismatchDistributions {
    std::string forward_label, backward_label;  // e.g. "A->B", "B->A"
    std::vector<double> forward, backward;       // ASR samples
    std::vector<std::size_t> forward_histogram, backward_histogram;  // bins over [0,1]
    KsResult ks;
};

inline std::vector<std::size_t> histogram(const std::vector<double>& values, std::size_t bins) {
    std::vector<std::size_t> h(bins, 0);
    for (double v : values) ++h[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))];
    return h;
}

/// Mathematical-attack ASRs of cross-source cells (C5-C8) whose victim has the
/// given balance level, split by transfer direction, plus their KS test.
inline MismatchDistributions mismatch_distributions(const std::vector<ExperimentCell>& cells, const std::string& balance,
                                                    const std::string& task, const std::string& first_source = "A",
                                                    std::size_t bins = 10) {
    MismatchDistributions d;
    d.forward_label = first_source + "->other";
    d.backward_label = "other->" + first_source;
    for (const auto& c : cells) {
        if (!c.ok() || c.task != task || c.family != AttackFamily::Mathematical) continue;
        if (c.src.source == c.trg.source || c.trg.balance != balance) continue;
        (c.src.source == first_source ? d.forward : d.backward).push_back(c.asr);
    }
    d.forward_histogram = histogram(d.forward, bins);
    d.backward_histogram = histogram(d.backward, bins);
    if (!d.forward.empty() && !d.backward.empty()) d.ks = ks_test(d.forward, d.backward);
    return d;
}

} // namespace dumb

#endif
