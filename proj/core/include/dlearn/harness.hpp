#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlearn/dataset.hpp"
#include "dlearn/dgp.hpp"
#include "dlearn/learners.hpp"
#include "dlearn/metrics.hpp"
#include "dlearn/stabilizer.hpp"

namespace dlearn {

enum class RunMode { Simulate, Fit, Evaluate, Mccv };

enum class PropensitySource { Column, Constant, Estimate };

// CSV ingestion schema. Unlisted columns become covariates when the explicit
// list is empty.
struct CsvSchema {
    std::string outcome = "r";
    std::string treatment = "a";
    std::vector<std::string> covariates;
    PropensitySource propensity_source = PropensitySource::Constant;
    std::string propensity_column = "pi";
    double propensity_constant = 0.0; // <= 0: 1/K
    int K = 2;
    bool map01 = false; // binary treatment coded {0,1} instead of {-1,+1}
    double clip = 0.01;
};

struct ExperimentConfig {
    RunMode mode = RunMode::Simulate;
    int scenario_id = 1;
    std::string input_path;
    std::string model_path;
    RuleKind method = RuleKind::SD;
    int n = 200;
    int p = 30;
    int reps = 100;
    int n_test = 10000;
    int folds = 5;
    std::uint64_t seed = 1;
    Regularization reg = Regularization::lasso_cv();
    ResidvarConfig residvar;
    CsvSchema schema;
    std::string output_path;
    std::string output_format = "csv"; // csv | jsonl
    int threads = 0;                   // 0 = hardware concurrency
};

struct ReportRow {
    std::string method;
    int scenario = 0; // 0 for file-based runs
    int n = 0;
    int p = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    std::optional<double> ape;
    std::optional<double> misclass;
    std::optional<double> value;
    std::string resid_family;
    double lambda = 0.0;
};

struct ReportAggregate {
    int reps = 0;
    int skipped = 0; // undefined-value MCCV iterations
    std::optional<double> ape_mean, ape_sem;
    std::optional<double> misclass_mean, misclass_sem;
    std::optional<double> value_mean, value_sem;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    ReportAggregate aggregate;
    std::map<std::string, std::string> config_echo;
    double wall_seconds = 0.0;
};

// Recomputes the aggregate block from the rows (mean and SEM; SEM absent
// below two observations).
ReportAggregate aggregate_rows(const std::vector<ReportRow>& rows, int skipped = 0);

// Dispatch one fit of any of the six methods.
ITRModel fit_method(const Dataset& data, RuleKind method, const Regularization& reg,
                    const ResidvarConfig& residvar_config);

// Replicated simulation benchmark: generate, fit, evaluate all three metrics.
ExperimentReport run_simulation(const ExperimentConfig& config);

// Monte-Carlo cross-validation on ingested data: random train subsets of
// size n, empirical value on the held-out remainder.
ExperimentReport run_mccv(const ExperimentConfig& config, const Dataset& data);

Dataset load_csv(const std::string& path, const CsvSchema& schema);

void write_report(const ExperimentReport& report, const std::string& path,
                  const std::string& format);
// Reads back a CSV report (data rows + aggregate block) for verification.
ExperimentReport read_report_csv(const std::string& path);

void write_dataset_csv(const Dataset& data, const std::string& path);

void save_model_json(const ITRModel& model, const std::string& path);
ITRModel load_model_json(const std::string& path);

// Plain key=value configuration files; '#' starts a comment.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);
std::map<std::string, std::string> describe(const ExperimentConfig& config);

} // namespace dlearn
