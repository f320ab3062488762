// dumb: command-line front end of the transferability benchmark.
//
//   dumb [--config run.json] [--seed N] [--jobs N] [--out DIR] <command>
//
// Commands run the pipeline stages in order: gen-data, ingest, train-all,
// tune-attacks, run-matrix, report. `all` chains the synthetic-data stages and
// `config` prints the effective config. Progress goes to stderr; the run
// directory is printed on stdout.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dumb/pipeline/report.hpp"

namespace {

int exit_code_for(const std::string& code) {
    if (code == "config-error") return 1;
    if (code == "missing-prerequisite") return 2;
    return 3;
}

std::optional<std::string> opt(const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DUMB adversarial transferability benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    bool resume = false;
    app.add_option("--config", config_path, "JSON run config");
    app.add_option("--seed", seed, "base seed (overrides the config)");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output root (overrides the config)");
    app.add_flag("--resume", resume, "reuse completed cells of an interrupted run-matrix");

    std::string task, source, path;
    std::optional<std::size_t> per_class;

    auto* gen = app.add_subcommand("gen-data", "generate synthetic datasets");
    gen->add_option("--task", task);
    gen->add_option("--source", source);
    gen->add_option("--seed", seed, "base seed (overrides the config)");
    gen->add_option("--per-class", per_class, "images per class");

    auto* ing = app.add_subcommand("ingest", "import a folder of PNG images as a dataset");
    ing->add_option("--path", path, "folder with one sub-folder per class")->required();
    ing->add_option("--task", task)->required();
    ing->add_option("--source", source)->required();

    auto* tr = app.add_subcommand("train-all", "train every model of the matrix");
    tr->add_option("--task", task);
    auto* tu = app.add_subcommand("tune-attacks", "tune attack parameters and store adversarial sets");
    tu->add_option("--task", task);
    auto* rm = app.add_subcommand("run-matrix", "evaluate every transfer cell");
    rm->add_flag("--resume", resume, "reuse completed cells of an interrupted run");
    auto* rep = app.add_subcommand("report", "emit figure bundles and summaries");
    auto* all = app.add_subcommand("all", "gen-data, train-all, tune-attacks, run-matrix and report");
    auto* cfg = app.add_subcommand("config", "print the effective config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        dumb::RunConfig config = config_path.empty() ? dumb::RunConfig{} : dumb::load_config(config_path);
        if (seed) config.seed = *seed;
        if (jobs) config.jobs = *jobs;
        if (!out_dir.empty()) config.output = out_dir;
        if (per_class) config.per_class = *per_class;
        config.validate_config();

        if (cfg->parsed()) {
            nlohmann::json j = config.to_json();
            j["config_hash"] = config.hash();
            std::cout << j.dump(2) << '\n';
            return 0;
        }

        const dumb::RunContext ctx = dumb::open_run(config, dumb::stderr_logger());
        if (gen->parsed()) dumb::gen_data(ctx, opt(task), opt(source));
        if (ing->parsed()) dumb::ingest(ctx, path, task, source);
        if (tr->parsed()) dumb::train_all(ctx, opt(task));
        if (tu->parsed()) dumb::tune_attacks(ctx, opt(task));
        if (rm->parsed()) dumb::run_matrix(ctx, resume);
        if (rep->parsed()) dumb::write_report(ctx);
        if (all->parsed()) {
            dumb::gen_data(ctx);
            dumb::train_all(ctx);
            dumb::tune_attacks(ctx);
            dumb::run_matrix(ctx, resume);
            dumb::write_report(ctx);
        }
        std::cout << ctx.root.string() << '\n';
        return 0;
    } catch (const dumb::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
