#include <gtest/gtest.h>

#include "dumb/harness/analysis.hpp"
#include "support.hpp"

using namespace dumb;

namespace {

std::vector<ModelProvenance> grid(const std::string& task) {
    std::vector<ModelProvenance> out;
    const MatrixShape shape;
    for (const auto& s : shape.sources)
        for (const auto& b : shape.balances)
            for (const auto& a : shape.archs) out.push_back({task, s, b, a, 0});
    return out;
}

/// A complete synthetic table with random per-sample outcomes.
std::vector<ExperimentCell> synthetic_table(std::uint64_t seed, const std::vector<std::string>& tasks = {"easy"}) {
    Rng rng(seed);
    std::vector<ExperimentCell> all;
    for (const auto& t : tasks) {
        auto cells = build_matrix(t, grid(t), default_attacks());
        for (auto& c : cells) {
            c.status = "ok";
            c.n = 6;
            std::size_t fooled = 0;
            for (std::size_t i = 0; i < c.n; ++i) {
                c.labels.push_back(static_cast<int>(i % 2));
                const bool f = rng.bernoulli(c.family == AttackFamily::Mathematical ? 0.6 : 0.3);
                c.outcomes.push_back(f ? '1' : '0');
                fooled += f;
            }
            c.asr = static_cast<double>(fooled) / 6.0;
        }
        all.insert(all.end(), cells.begin(), cells.end());
    }
    return all;
}

} // namespace

TEST(Analysis, AggregateMatchesFullScan) {
    const auto table = synthetic_table(1);
    const auto means = aggregate_by_case(table);
    for (const auto& [key, g] : means) {
        const auto& [task, attack, dc] = key;
        double sum = 0;
        std::size_t n = 0;
        for (const auto& c : table)
            if (c.task == task && c.attack == attack && c.dumb_case == dc) {
                sum += c.asr;
                ++n;
            }
        EXPECT_EQ(g.count, n);
        EXPECT_DOUBLE_EQ(g.mean(), sum / static_cast<double>(n));
    }
    EXPECT_EQ(means.at({"easy", "FGSM", DumbCase::C1}).count, 24u);
}

TEST(Analysis, AggregateIgnoresFailedCellsAndSingleGroup) {
    auto table = synthetic_table(2);
    for (auto& c : table)
        if (c.attack == "BIM") c.status = "constraint-infeasible";
    const auto means = aggregate_by_case(table);
    EXPECT_EQ(means.count({"easy", "BIM", DumbCase::C1}), 0u);
    ExperimentCell one = table.front();
    one.asr = 0.37;
    EXPECT_DOUBLE_EQ(aggregate_by_case({one}).begin()->second.mean(), 0.37);
}

TEST(Analysis, PermutationInvariant) {
    auto table = synthetic_table(3);
    const auto before = aggregate_by_case(table);
    Rng rng(9);
    rng.shuffle(table);
    const auto after = aggregate_by_case(table);
    ASSERT_EQ(before.size(), after.size());
    for (const auto& [k, g] : before) EXPECT_NEAR(after.at(k).mean(), g.mean(), 1e-12);
}

TEST(Analysis, ThreeHundredThirtySixComparisonsPerTask) {
    const auto fc = compare_families(synthetic_table(4, {"easy", "hard"}));
    std::map<std::string, std::size_t> per_task;
    for (const auto& [k, v] : fc) {
        EXPECT_EQ(v.comparisons, 42u);
        per_task[k.first] += v.comparisons;
    }
    EXPECT_EQ(per_task["easy"], 336u);
    EXPECT_EQ(per_task["hard"], 336u);
}

TEST(Analysis, ZeroNonMathNeverWinsAndTiesDoNotCount) {
    auto table = synthetic_table(5);
    for (auto& c : table)
        if (c.family == AttackFamily::NonMathematical) c.asr = 0.0;
    for (const auto& [k, v] : compare_families(table)) EXPECT_EQ(v.non_math_wins, 0u);
    for (auto& c : table) c.asr = 0.5;
    for (const auto& [k, v] : compare_families(table)) EXPECT_EQ(v.non_math_wins, 0u);
    for (auto& c : table) c.asr = c.family == AttackFamily::NonMathematical ? 0.6 : 0.5;
    for (const auto& [k, v] : compare_families(table)) EXPECT_EQ(v.non_math_wins, 42u);
}

TEST(Analysis, ClassMatricesMatchScanAndRecombine) {
    const auto table = synthetic_table(6);
    const MatrixShape shape;
    const auto m = asr_by_class(table, "easy", shape.balances);
    for (std::size_t si = 0; si < 4; ++si)
        for (std::size_t ti = 0; ti < 4; ++ti) {
            std::size_t minority = 0, minority_n = 0, majority = 0, majority_n = 0;
            for (const auto& c : table) {
                if (c.family != AttackFamily::Mathematical || c.src.balance != shape.balances[si] ||
                    c.trg.balance != shape.balances[ti])
                    continue;
                for (std::size_t i = 0; i < c.labels.size(); ++i) {
                    const bool f = c.outcomes[i] == '1';
                    if (c.labels[i] == 0) {
                        minority += f;
                        ++minority_n;
                    } else {
                        majority += f;
                        ++majority_n;
                    }
                }
            }
            EXPECT_EQ(m.minority[si][ti].fooled, minority);
            EXPECT_EQ(m.minority[si][ti].total, minority_n);
            EXPECT_EQ(m.majority[si][ti].fooled, majority);
            const auto& mi = m.minority[si][ti];
            const auto& ma = m.majority[si][ti];
            const double weighted = (mi.rate() * mi.total + ma.rate() * ma.total) / (mi.total + ma.total);
            EXPECT_NEAR(weighted, m.combined[si][ti].rate(), 1e-12);
        }
}

TEST(Analysis, ArchitectureMeans) {
    const auto table = synthetic_table(7);
    const auto by_arch = asr_by_architecture(table, "easy");
    EXPECT_EQ(by_arch.size(), 9u);
    for (const auto& [k, g] : by_arch) EXPECT_EQ(g.count, 7u * 64u);
}

TEST(Analysis, MismatchDistributionsFilterAndPartition) {
    const auto table = synthetic_table(8);
    const auto d = mismatch_distributions(table, "strong", "easy");
    std::size_t expected = 0;
    for (const auto& c : table)
        expected += c.family == AttackFamily::Mathematical && c.src.source != c.trg.source && c.trg.balance == "strong";
    EXPECT_EQ(d.forward.size() + d.backward.size(), expected);
    EXPECT_EQ(d.forward.size(), d.backward.size());
    std::size_t hist = 0;
    for (auto h : d.forward_histogram) hist += h;
    EXPECT_EQ(hist, d.forward.size());
    EXPECT_EQ(d.ks.statistic, ks_test(d.forward, d.backward).statistic);

    // identical directions give D = 0
    auto mirrored = table;
    for (auto& c : mirrored) c.asr = 0.25;
    const auto same = mismatch_distributions(mirrored, "strong", "easy");
    EXPECT_EQ(same.ks.statistic, 0.0);
    EXPECT_EQ(same.ks.p_value, 1.0);
}

TEST(Analysis, HistogramEdges) {
    EXPECT_EQ(histogram({0.0, 0.05, 0.1, 1.0}, 10), (std::vector<std::size_t>{2, 1, 0, 0, 0, 0, 0, 0, 0, 1}));
}
