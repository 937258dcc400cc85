#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dlearn/harness.hpp"

namespace {

using dlearn::ExperimentConfig;

// Options are collected as (key, value) pairs and replayed through the same
// parser the config files use, so flags and file entries behave identically.
struct Pending {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string config_path;
};

void add_option(CLI::App* cmd, Pending& pending, const std::string& flag,
                const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        flag,
        [&pending, key](const std::string& v) { pending.entries.emplace_back(key, v); },
        help);
}

void add_common(CLI::App* cmd, Pending& pending) {
    cmd->add_option("--config", pending.config_path, "key=value configuration file");
    add_option(cmd, pending, "--method", "method",
               "d | rd | ad | sd | srd | sad");
    add_option(cmd, pending, "--seed", "seed", "master seed");
    add_option(cmd, pending, "--folds", "folds", "cross-validation folds");
    add_option(cmd, pending, "--reg", "reg", "none | cv | lasso:<lambda>");
    add_option(cmd, pending, "--residvar", "residvar",
               "'+'-joined residual-model candidates, e.g. linear-l1+random-forest");
    add_option(cmd, pending, "--output", "output", "report path");
    add_option(cmd, pending, "--format", "format", "csv | jsonl");
    add_option(cmd, pending, "--threads", "threads", "worker threads (0 = auto)");
}

void add_csv_schema(CLI::App* cmd, Pending& pending) {
    add_option(cmd, pending, "--input", "input", "input CSV path");
    add_option(cmd, pending, "--outcome-col", "outcome_col", "outcome column name");
    add_option(cmd, pending, "--treatment-col", "treatment_col",
               "treatment column name");
    add_option(cmd, pending, "--propensity", "propensity",
               "estimate | column:<name> | constant:<value>");
    add_option(cmd, pending, "-K,--arms", "K", "number of treatment arms");
    add_option(cmd, pending, "--map01", "map01", "treat 0/1 coding as -1/+1");
}

ExperimentConfig build_config(const Pending& pending, const std::string& mode) {
    ExperimentConfig config;
    if (!pending.config_path.empty())
        config = dlearn::load_config_file(pending.config_path);
    dlearn::apply_config_entry(config, "mode", mode);
    for (const auto& [key, value] : pending.entries)
        dlearn::apply_config_entry(config, key, value);
    return config;
}

void print_summary(const dlearn::ExperimentReport& report) {
    for (const auto& [key, value] : report.config_echo)
        std::printf("%s=%s\n", key.c_str(), value.c_str());
    const auto& agg = report.aggregate;
    std::printf("reps=%d\n", agg.reps);
    if (agg.skipped > 0) std::printf("skipped=%d\n", agg.skipped);
    auto line = [](const char* name, const std::optional<double>& mean,
                   const std::optional<double>& sem) {
        if (!mean) return;
        if (sem)
            std::printf("%s=%.6f (sem %.6f)\n", name, *mean, *sem);
        else
            std::printf("%s=%.6f\n", name, *mean);
    };
    line("ape", agg.ape_mean, agg.ape_sem);
    line("misclass", agg.misclass_mean, agg.misclass_sem);
    line("value", agg.value_mean, agg.value_sem);
    std::printf("wall_seconds=%.3f\n", report.wall_seconds);
}

int run_simulate(const Pending& pending) {
    ExperimentConfig config = build_config(pending, "simulate");
    auto report = dlearn::run_simulation(config);
    if (!config.output_path.empty())
        dlearn::write_report(report, config.output_path, config.output_format);
    print_summary(report);
    return 0;
}

int run_fit(const Pending& pending) {
    ExperimentConfig config = build_config(pending, "fit");
    if (config.input_path.empty())
        throw dlearn::InvalidConfig("fit requires --input");
    if (config.model_path.empty())
        throw dlearn::InvalidConfig("fit requires --model");
    auto data = dlearn::load_csv(config.input_path, config.schema);
    auto model =
        dlearn::fit_method(data, config.method, config.reg, config.residvar);
    dlearn::save_model_json(model, config.model_path);
    std::printf("method=%s\n", dlearn::to_string(model.kind).c_str());
    std::printf("n=%ld p=%ld\n", static_cast<long>(data.n()),
                static_cast<long>(model.p()));
    std::printf("lambda=%g\n", model.lambda);
    if (!model.resid_family.empty())
        std::printf("resid_family=%s\n", model.resid_family.c_str());
    std::printf("model=%s\n", config.model_path.c_str());
    return 0;
}

int run_evaluate(const Pending& pending) {
    ExperimentConfig config = build_config(pending, "evaluate");
    if (config.input_path.empty())
        throw dlearn::InvalidConfig("evaluate requires --input");
    if (config.model_path.empty())
        throw dlearn::InvalidConfig("evaluate requires --model");
    auto model = dlearn::load_model_json(config.model_path);
    config.schema.K = model.K;
    auto data = dlearn::load_csv(config.input_path, config.schema);
    double value = dlearn::empirical_value(model, data);
    std::printf("method=%s\n", dlearn::to_string(model.kind).c_str());
    std::printf("n=%ld\n", static_cast<long>(data.n()));
    std::printf("value=%.6f\n", value);
    return 0;
}

int run_mccv_cmd(const Pending& pending) {
    ExperimentConfig config = build_config(pending, "mccv");
    if (config.input_path.empty())
        throw dlearn::InvalidConfig("mccv requires --input");
    auto data = dlearn::load_csv(config.input_path, config.schema);
    auto report = dlearn::run_mccv(config, data);
    if (!config.output_path.empty())
        dlearn::write_report(report, config.output_path, config.output_format);
    print_summary(report);
    return 0;
}

int run_export_dgp(const Pending& pending) {
    ExperimentConfig config = build_config(pending, "simulate");
    if (config.output_path.empty())
        throw dlearn::InvalidConfig("export-dgp requires --output");
    auto spec = dlearn::scenario(config.scenario_id);
    auto labeled = dlearn::generate(spec, config.n, config.p, config.seed);
    dlearn::write_dataset_csv(labeled.data, config.output_path);
    std::printf("scenario=%d n=%d p=%d seed=%llu\n", config.scenario_id, config.n,
                config.p, static_cast<unsigned long long>(config.seed));
    std::printf("output=%s\n", config.output_path.c_str());
    return 0;
}

int exit_code(dlearn::ErrorCategory category) {
    switch (category) {
        case dlearn::ErrorCategory::Config: return 2;
        case dlearn::ErrorCategory::Data: return 3;
        case dlearn::ErrorCategory::Numeric: return 4;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct-learning treatment rule estimation"};
    app.require_subcommand(1);

    Pending pending;

    auto* simulate = app.add_subcommand(
        "simulate", "replicated scenario benchmark with APE, error rate, value");
    add_common(simulate, pending);
    add_option(simulate, pending, "--scenario", "scenario", "scenario id, 1-8");
    add_option(simulate, pending, "-n,--train-size", "n", "training sample size");
    add_option(simulate, pending, "-p,--dim", "p", "covariate dimension");
    add_option(simulate, pending, "--reps", "reps", "replications");
    add_option(simulate, pending, "--n-test", "n_test", "test sample size");

    auto* fit = app.add_subcommand("fit", "fit a rule on a CSV and save it");
    add_common(fit, pending);
    add_csv_schema(fit, pending);
    add_option(fit, pending, "--model", "model", "output model JSON path");

    auto* evaluate =
        app.add_subcommand("evaluate", "empirical value of a saved rule on a CSV");
    add_common(evaluate, pending);
    add_csv_schema(evaluate, pending);
    add_option(evaluate, pending, "--model", "model", "model JSON path");

    auto* mccv = app.add_subcommand(
        "mccv", "Monte-Carlo cross-validated value comparison on a CSV");
    add_common(mccv, pending);
    add_csv_schema(mccv, pending);
    add_option(mccv, pending, "-n,--train-size", "n", "training subset size");
    add_option(mccv, pending, "--iterations", "iterations", "random splits");

    auto* export_dgp =
        app.add_subcommand("export-dgp", "write a simulated scenario dataset as CSV");
    add_common(export_dgp, pending);
    add_option(export_dgp, pending, "--scenario", "scenario", "scenario id, 1-8");
    add_option(export_dgp, pending, "-n,--train-size", "n", "sample size");
    add_option(export_dgp, pending, "-p,--dim", "p", "covariate dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(pending);
        if (fit->parsed()) return run_fit(pending);
        if (evaluate->parsed()) return run_evaluate(pending);
        if (mccv->parsed()) return run_mccv_cmd(pending);
        if (export_dgp->parsed()) return run_export_dgp(pending);
    } catch (const dlearn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
