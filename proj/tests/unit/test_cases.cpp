#include <gtest/gtest.h>

#include <map>

#include "dumb/harness/cases.hpp"
#include "dumb/harness/experiment.hpp"

using namespace dumb;

namespace {

std::vector<ModelProvenance> grid24(const std::string& task = "easy") {
    std::vector<ModelProvenance> out;
    const MatrixShape shape;
    for (const auto& s : shape.sources)
        for (const auto& b : shape.balances)
            for (const auto& a : shape.archs) out.push_back({task, s, b, a, 0});
    return out;
}

} // namespace

TEST(Cases, TruthTable) {
    const std::map<std::tuple<bool, bool, bool>, DumbCase> table{
        {{true, true, true}, DumbCase::C1},   {{true, true, false}, DumbCase::C2},
        {{true, false, true}, DumbCase::C3},  {{true, false, false}, DumbCase::C4},
        {{false, true, true}, DumbCase::C5},  {{false, true, false}, DumbCase::C6},
        {{false, false, true}, DumbCase::C7}, {{false, false, false}, DumbCase::C8}};
    for (const auto& [k, v] : table) {
        const auto [ds, m, b] = k;
        const ModelProvenance src{"easy", "A", "balanced", "arch-S", 0};
        const ModelProvenance trg{"easy", ds ? "A" : "B", b ? "balanced" : "weak", m ? "arch-S" : "arch-L", 0};
        EXPECT_EQ(classify_case(src, trg), v);
        EXPECT_EQ(case_from_matches(ds, m, b), v);
    }
}

TEST(Cases, Names) {
    for (DumbCase c : kAllCases) EXPECT_EQ(parse_case(case_name(c)), c);
    EXPECT_EQ(case_name(DumbCase::C8), "C8");
    EXPECT_THROW(parse_case("C9"), Error);
    EXPECT_THROW(parse_case("c1"), Error);
}

TEST(Cases, TaskMismatch) {
    try {
        classify_case({"easy", "A", "weak", "arch-S", 0}, {"hard", "A", "weak", "arch-S", 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "task-mismatch");
    }
}

TEST(Cases, CensusByEnumeration) {
    const auto models = grid24();
    std::map<DumbCase, std::size_t> census;
    for (const auto& s : models)
        for (const auto& t : models) ++census[classify_case(s, t)];
    const std::vector<std::size_t> expected{24, 72, 48, 144, 24, 72, 48, 144};
    std::size_t total = 0;
    for (DumbCase c : kAllCases) {
        EXPECT_EQ(census[c], expected[static_cast<std::size_t>(case_index(c))]) << case_name(c);
        total += census[c];
    }
    EXPECT_EQ(total, 576u);
}

TEST(Cases, TransferCaseUsesReferenceModel) {
    const ModelProvenance trg{"easy", "A", "weak", "arch-L", 0};
    EXPECT_EQ(classify_transfer_case("easy", "A", "arch-M", "balanced", trg), DumbCase::C4);
    EXPECT_EQ(classify_transfer_case("easy", "B", "arch-L", "weak", trg), DumbCase::C5);
    EXPECT_THROW(classify_transfer_case("hard", "A", "arch-M", "balanced", trg), Error);
}
