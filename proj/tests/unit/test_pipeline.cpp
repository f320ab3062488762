#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dumb/pipeline/report.hpp"

using namespace dumb;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig tiny_config(const std::string& out) {
    RunConfig c = config_from_json(nlohmann::json::parse(R"({
        "tasks": ["easy"], "sources": ["A", "B"], "balances": ["balanced", "weak"], "archs": ["arch-S"],
        "attacks": ["FGSM", "Invert"], "grids": {"FGSM": {"min": 0.02, "max": 0.1, "step": 0.04}},
        "eval_samples": 4, "per_class": 60, "image_size": 16,
        "training": {"epochs": 3, "batch_size": 16, "learning_rate": 0.01, "momentum": 0.9},
        "seed": 11, "export_png": false})"));
    c.output = out;
    return c;
}

fs::path fresh(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dumb_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

/// Generate, train, tune and run the whole tiny matrix.
RunContext complete_run(const std::string& name) {
    const RunContext ctx = open_run(tiny_config(fresh(name).string()));
    gen_data(ctx);
    train_all(ctx);
    tune_attacks(ctx);
    run_matrix(ctx);
    return ctx;
}

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST(Config, HashIgnoresExecutionSettings) {
    RunConfig a = tiny_config("x"), b = tiny_config("y");
    b.jobs = 4;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 12u);
    b.seed = 12;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(config_from_json(a.to_json()).hash(), a.hash());
}

TEST(Config, Errors) {
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"alpha": "high"})")); }), "config-error");
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"tasks": ["odd"]})")).validate_config(); }), "config-error");
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"eval_samples": 5})")).validate_config(); }), "config-error");
    EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), "config-error");
    EXPECT_EQ(code_of([] { RunConfig().attack_spec("CW"); }), "config-error");
}

TEST(Config, OverridesReachAttackSpecs) {
    RunConfig c = tiny_config("x");
    c.hyper_overrides = {{"FGSM", {{"unused", 3}}}};
    const auto s = c.attack_spec("FGSM");
    EXPECT_EQ(s.grid_values(), (std::vector<double>{0.02, 0.06, 0.1}));
    EXPECT_DOUBLE_EQ(s.hp("unused"), 3.0);
}

TEST(Pipeline, StagesRequirePrerequisites) {
    const RunContext ctx = open_run(tiny_config(fresh("prereq").string()));
    EXPECT_EQ(code_of([&] { write_report(ctx); }), "missing-prerequisite");
    EXPECT_EQ(code_of([&] { train_all(ctx); }), "missing-prerequisite");
    gen_data(ctx);
    EXPECT_EQ(code_of([&] { tune_attacks(ctx); }), "missing-prerequisite");
    EXPECT_EQ(code_of([&] { run_matrix(ctx); }), "missing-prerequisite");
    EXPECT_FALSE(fs::exists(ctx.results() / "results.csv"));
}

TEST(Pipeline, EndToEndDeterministicAndResumable) {
    const RunContext a = complete_run("a");
    const RunContext b = complete_run("b");
    EXPECT_EQ(a.hash, b.hash);
    const std::string csv = slurp(a.results() / "results.csv");
    EXPECT_EQ(csv, slurp(b.results() / "results.csv"));
    const auto cells = from_csv(csv);
    EXPECT_EQ(cells.size(), 4u * 4u + 2u * 4u);
    for (const auto& c : cells)
        if (c.ok()) {
            EXPECT_GE(c.asr, 0.0);
            EXPECT_LE(c.asr, 1.0);
        }

    // interrupt halfway: keep half of the journal, then resume
    const fs::path journal = a.results() / "cells.jsonl";
    std::vector<std::string> lines;
    {
        std::ifstream f(journal);
        for (std::string l; std::getline(f, l);) lines.push_back(l);
    }
    {
        std::ofstream f(journal, std::ios::trunc);
        for (std::size_t i = 0; i < lines.size() / 2; ++i) f << lines[i] << '\n';
        f << lines[lines.size() / 2].substr(0, 10);  // torn write
    }
    fs::remove(a.results() / "results.csv");
    run_matrix(a, true);
    EXPECT_EQ(slurp(a.results() / "results.csv"), csv);

    const auto files = write_report(a);
    EXPECT_GE(files.size(), 8u);
    const std::string summary = slurp(a.report() / "summary.json");
    write_report(b);
    EXPECT_EQ(summary, slurp(b.report() / "summary.json"));
    EXPECT_EQ(slurp(a.report() / "fig3_math_case_asr.csv").rfind("# config_hash=" + a.hash, 0), 0u);
}

TEST(Pipeline, WhiteBoxCellsMatchTuningAsr) {
    const RunContext ctx = complete_run("c1");
    std::size_t checked = 0;
    for (const auto& c : load_results(ctx)) {
        if (c.dumb_case != DumbCase::C1 || !c.ok()) continue;
        const auto tuned = nlohmann::json::parse(slurp(ctx.tuning() / c.task / c.attack / (c.src_id() + ".json")));
        EXPECT_DOUBLE_EQ(c.asr, tuned.at("asr").get<double>()) << c.key();
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

TEST(Pipeline, GenDataIsIdempotentAndIngestGuardsModels) {
    const RunContext ctx = open_run(tiny_config(fresh("ingest").string()));
    EXPECT_EQ(gen_data(ctx, std::string("easy"), std::string("A")), 1u);
    EXPECT_EQ(gen_data(ctx, std::string("easy"), std::string("A")), 0u);
    const std::string manifest = slurp(dataset_dir(ctx.data(), "easy", "A") / "manifest.json");
    EXPECT_NE(manifest.find(ctx.hash), std::string::npos);
    EXPECT_EQ(code_of([&] { ingest(ctx, "/nonexistent/folder", "easy", "B"); }).empty(), false);
}
