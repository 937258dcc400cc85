#include "dlearn/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dlearn/rng.hpp"

namespace dlearn {

namespace {

using json = nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

bool method_is_multi(RuleKind method) {
    return method == RuleKind::AD || method == RuleKind::SAD;
}

} // namespace

ITRModel fit_method(const Dataset& data, RuleKind method, const Regularization& reg,
                    const ResidvarConfig& residvar_config) {
    switch (method) {
        case RuleKind::D: return fit_dlearning(data, reg);
        case RuleKind::RD: return fit_rdlearning(data, reg, reg);
        case RuleKind::AD: return fit_adlearning(data, reg);
        case RuleKind::SD:
        case RuleKind::SRD:
        case RuleKind::SAD:
            return stabilize(data, base_of(method), residvar_config, reg);
    }
    throw InvalidConfig("unknown method");
}

ReportAggregate aggregate_rows(const std::vector<ReportRow>& rows, int skipped) {
    ReportAggregate agg;
    agg.reps = static_cast<int>(rows.size());
    agg.skipped = skipped;
    auto summarize = [&](auto&& pick, std::optional<double>& mean_out,
                         std::optional<double>& sem_out) {
        std::vector<double> values;
        for (const auto& r : rows)
            if (auto v = pick(r)) values.push_back(*v);
        if (values.empty()) return;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        mean_out = mean;
        if (values.size() >= 2) {
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            double sd = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
            sem_out = sd / std::sqrt(static_cast<double>(values.size()));
        }
    };
    summarize([](const ReportRow& r) { return r.ape; }, agg.ape_mean, agg.ape_sem);
    summarize([](const ReportRow& r) { return r.misclass; }, agg.misclass_mean,
              agg.misclass_sem);
    summarize([](const ReportRow& r) { return r.value; }, agg.value_mean,
              agg.value_sem);
    return agg;
}

ExperimentReport run_simulation(const ExperimentConfig& config) {
    if (config.reps < 1) throw InvalidConfig("reps must be at least 1");
    const bool multi = method_is_multi(config.method);
    ScenarioSpec spec = scenario(config.scenario_id);
    if (multi != (spec.mode == TreatmentMode::MultiArm))
        throw InvalidConfig("method " + to_string(config.method) +
                            " does not match scenario " +
                            std::to_string(config.scenario_id));

    const auto start = std::chrono::steady_clock::now();
    std::vector<ReportRow> rows(static_cast<std::size_t>(config.reps));

    parallel_for(config.reps, config.threads, [&](int rep) {
        const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
        LabeledDataset train = generate(spec, config.n, config.p, rep_seed);
        LabeledDataset test =
            generate(spec, config.n_test, config.p, derive_seed(rep_seed, 0x7357u));

        Regularization reg = config.reg;
        reg.seed = derive_seed(rep_seed, 1);
        ResidvarConfig rv = config.residvar;
        rv.seed = derive_seed(rep_seed, 2);

        ITRModel model = fit_method(train.data, config.method, reg, rv);

        ReportRow row;
        row.method = to_string(config.method);
        row.scenario = config.scenario_id;
        row.n = config.n;
        row.p = config.p;
        row.rep = rep;
        row.seed = rep_seed;
        row.ape = ape(model, test.data.X.values, test.opt_scores);
        row.misclass = misclassification(model, test.data.X.values, test.opt_arm);
        row.value = empirical_value(model, test.data);
        row.resid_family = model.resid_family;
        row.lambda = model.lambda;
        rows[static_cast<std::size_t>(rep)] = std::move(row);
    });

    ExperimentReport report;
    report.rows = std::move(rows);
    report.aggregate = aggregate_rows(report.rows);
    report.config_echo = describe(config);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ExperimentReport run_mccv(const ExperimentConfig& config, const Dataset& data) {
    if (config.reps < 1) throw InvalidConfig("iterations must be at least 1");
    if (config.n >= data.n())
        throw InvalidConfig("training size must be below the dataset size");
    if (method_is_multi(config.method) != (data.mode == TreatmentMode::MultiArm))
        throw InvalidConfig("method does not match the dataset treatment mode");

    const auto start = std::chrono::steady_clock::now();
    const int total = static_cast<int>(data.n());
    std::vector<std::optional<ReportRow>> slots(static_cast<std::size_t>(config.reps));
    std::atomic<int> skipped{0};

    parallel_for(config.reps, config.threads, [&](int iter) {
        const std::uint64_t iter_seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(iter));
        Rng rng(iter_seed);
        auto perm = rng.permutation(total);
        std::vector<Eigen::Index> train_rows, test_rows;
        for (int i = 0; i < total; ++i)
            (i < config.n ? train_rows : test_rows)
                .push_back(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
        Dataset train = data.subset(train_rows);
        Dataset test = data.subset(test_rows);

        Regularization reg = config.reg;
        reg.seed = derive_seed(iter_seed, 1);
        ResidvarConfig rv = config.residvar;
        rv.seed = derive_seed(iter_seed, 2);

        ITRModel model = fit_method(train, config.method, reg, rv);
        ReportRow row;
        row.method = to_string(config.method);
        row.scenario = 0;
        row.n = config.n;
        row.p = static_cast<int>(data.p()) - 1;
        row.rep = iter;
        row.seed = iter_seed;
        row.resid_family = model.resid_family;
        row.lambda = model.lambda;
        try {
            row.value = empirical_value(model, test);
        } catch (const UndefinedValue&) {
            skipped.fetch_add(1);
            return; // dropped iteration, counted in the aggregate block
        }
        slots[static_cast<std::size_t>(iter)] = std::move(row);
    });

    ExperimentReport report;
    for (auto& slot : slots)
        if (slot) report.rows.push_back(std::move(*slot));
    report.aggregate = aggregate_rows(report.rows, skipped.load());
    report.config_echo = describe(config);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    if (cell.empty()) throw ParseError(row, col, "blank cell");
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError(row, col, "unparseable numeric '" + cell + "'");
    }
    if (pos != cell.size())
        throw ParseError(row, col, "unparseable numeric '" + cell + "'");
    return value;
}

} // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty file: " + path);
    auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };

    const int outcome_col = column(schema.outcome);
    const int treatment_col = column(schema.treatment);
    if (outcome_col < 0)
        throw InvalidConfig("outcome column '" + schema.outcome + "' not found");
    if (treatment_col < 0)
        throw InvalidConfig("treatment column '" + schema.treatment + "' not found");
    int propensity_col = -1;
    if (schema.propensity_source == PropensitySource::Column) {
        propensity_col = column(schema.propensity_column);
        if (propensity_col < 0)
            throw InvalidConfig("propensity column '" + schema.propensity_column +
                                "' not found");
    }

    std::vector<int> covariate_cols;
    if (schema.covariates.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            int c = static_cast<int>(i);
            if (c != outcome_col && c != treatment_col && c != propensity_col)
                covariate_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.covariates) {
            int c = column(name);
            if (c < 0)
                throw InvalidConfig("covariate column '" + name + "' not found");
            covariate_cols.push_back(c);
        }
    }

    std::vector<std::vector<double>> raw;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(row_number, cells.size(),
                             "expected " + std::to_string(header.size()) + " cells");
        std::vector<double> parsed(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            parsed[c] = parse_cell(cells[c], row_number, c + 1);
        raw.push_back(std::move(parsed));
    }
    if (raw.empty()) throw InvalidInput("no data rows in " + path);

    const Eigen::Index n = static_cast<Eigen::Index>(raw.size());
    const Eigen::Index p = static_cast<Eigen::Index>(covariate_cols.size());
    Matrix design(n, p + 1);
    design.col(0).setOnes();
    Eigen::VectorXi arms(n);
    Vector outcomes(n);

    const bool binary = schema.K == 2;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& cells = raw[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < p; ++j)
            design(i, j + 1) = cells[static_cast<std::size_t>(
                covariate_cols[static_cast<std::size_t>(j)])];
        outcomes[i] = cells[static_cast<std::size_t>(outcome_col)];
        double a = cells[static_cast<std::size_t>(treatment_col)];
        int label = static_cast<int>(a);
        if (static_cast<double>(label) != a)
            throw InvalidInput("non-integer arm label at data row " +
                               std::to_string(i + 1));
        if (binary) {
            if (schema.map01) {
                if (label == 0) label = -1;
                else if (label != 1)
                    throw InvalidInput("arm label must be 0/1 at data row " +
                                       std::to_string(i + 1));
            } else if (label != -1 && label != 1) {
                throw InvalidInput("arm label must be -1/+1 at data row " +
                                   std::to_string(i + 1));
            }
        } else if (label < 1 || label > schema.K) {
            throw InvalidInput("arm label outside 1.." + std::to_string(schema.K) +
                               " at data row " + std::to_string(i + 1));
        }
        arms[i] = label;
    }

    Vector propensity(n);
    switch (schema.propensity_source) {
        case PropensitySource::Column:
            for (Eigen::Index i = 0; i < n; ++i)
                propensity[i] =
                    raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(propensity_col)];
            break;
        case PropensitySource::Constant: {
            double c = schema.propensity_constant > 0.0 ? schema.propensity_constant
                                                        : 1.0 / schema.K;
            propensity.setConstant(c);
            break;
        }
        case PropensitySource::Estimate: {
            Eigen::VectorXi labels(n);
            if (binary)
                for (Eigen::Index i = 0; i < n; ++i) labels[i] = arms[i] == 1 ? 1 : 2;
            else
                labels = arms;
            PropensityModel pm = fit_propensity(design, labels, schema.K, schema.clip);
            propensity = pm.observed_probabilities(design, labels);
            break;
        }
    }

    DesignMatrix X{std::move(design)};
    return binary ? Dataset::binary(std::move(X), std::move(arms), std::move(outcomes),
                                    std::move(propensity))
                  : Dataset::multi_arm(std::move(X), std::move(arms),
                                       std::move(outcomes), std::move(propensity),
                                       schema.K);
}

namespace {

const char* kReportHeader =
    "method,scenario,n,p,rep,seed,ape,misclass,value,resid_family,lambda";

std::string opt_str(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

} // namespace

void write_report(const ExperimentReport& report, const std::string& path,
                  const std::string& format) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path);

    if (format == "csv") {
        for (const auto& [key, value] : report.config_echo)
            out << "# " << key << "=" << value << "\n";
        out << "# wall_seconds=" << fmt_double(report.wall_seconds) << "\n";
        out << kReportHeader << "\n";
        for (const auto& r : report.rows)
            out << r.method << ',' << r.scenario << ',' << r.n << ',' << r.p << ','
                << r.rep << ',' << r.seed << ',' << opt_str(r.ape) << ','
                << opt_str(r.misclass) << ',' << opt_str(r.value) << ','
                << r.resid_family << ',' << fmt_double(r.lambda) << "\n";
        const auto& a = report.aggregate;
        out << ",,,," << "mean,," << opt_str(a.ape_mean) << ','
            << opt_str(a.misclass_mean) << ',' << opt_str(a.value_mean) << ",,\n";
        out << ",,,," << "sem,," << opt_str(a.ape_sem) << ',' << opt_str(a.misclass_sem)
            << ',' << opt_str(a.value_sem) << ",,\n";
        out << ",,,," << "skipped,,,," << a.skipped << ",,\n";
        return;
    }
    if (format == "jsonl") {
        json echo(report.config_echo);
        out << json{{"config", echo}, {"wall_seconds", report.wall_seconds}}.dump()
            << "\n";
        for (const auto& r : report.rows) {
            json row{{"method", r.method}, {"scenario", r.scenario}, {"n", r.n},
                     {"p", r.p},           {"rep", r.rep},           {"seed", r.seed},
                     {"resid_family", r.resid_family},
                     {"lambda", r.lambda}};
            if (r.ape) row["ape"] = *r.ape;
            if (r.misclass) row["misclass"] = *r.misclass;
            if (r.value) row["value"] = *r.value;
            out << row.dump() << "\n";
        }
        json agg{{"reps", report.aggregate.reps}, {"skipped", report.aggregate.skipped}};
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) agg[key] = *v;
        };
        put("ape_mean", report.aggregate.ape_mean);
        put("ape_sem", report.aggregate.ape_sem);
        put("misclass_mean", report.aggregate.misclass_mean);
        put("misclass_sem", report.aggregate.misclass_sem);
        put("value_mean", report.aggregate.value_mean);
        put("value_sem", report.aggregate.value_sem);
        out << json{{"aggregate", agg}}.dump() << "\n";
        return;
    }
    throw InvalidConfig("unknown report format: " + format);
}

ExperimentReport read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    ExperimentReport report;
    std::string line;
    bool saw_header = false;
    auto opt_parse = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != kReportHeader) throw InvalidInput("unexpected report header");
            saw_header = true;
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != 11) throw InvalidInput("malformed report row");
        const std::string& rep = cells[4];
        if (rep == "mean") {
            report.aggregate.ape_mean = opt_parse(cells[6]);
            report.aggregate.misclass_mean = opt_parse(cells[7]);
            report.aggregate.value_mean = opt_parse(cells[8]);
            continue;
        }
        if (rep == "sem") {
            report.aggregate.ape_sem = opt_parse(cells[6]);
            report.aggregate.misclass_sem = opt_parse(cells[7]);
            report.aggregate.value_sem = opt_parse(cells[8]);
            continue;
        }
        if (rep == "skipped") {
            report.aggregate.skipped = static_cast<int>(std::stod(cells[8]));
            continue;
        }
        ReportRow row;
        row.method = cells[0];
        row.scenario = std::stoi(cells[1]);
        row.n = std::stoi(cells[2]);
        row.p = std::stoi(cells[3]);
        row.rep = std::stoi(cells[4]);
        row.seed = std::stoull(cells[5]);
        row.ape = opt_parse(cells[6]);
        row.misclass = opt_parse(cells[7]);
        row.value = opt_parse(cells[8]);
        row.resid_family = cells[9];
        row.lambda = std::stod(cells[10]);
        report.rows.push_back(std::move(row));
    }
    report.aggregate.reps = static_cast<int>(report.rows.size());
    return report;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path);
    const Eigen::Index p = data.p() - 1;
    for (Eigen::Index j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
    out << "a,r,pi\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j)
            out << fmt_double(data.X.values(i, j + 1)) << ',';
        out << data.A[i] << ',' << fmt_double(data.R[i]) << ','
            << fmt_double(data.pi[i]) << "\n";
    }
}

void save_model_json(const ITRModel& model, const std::string& path) {
    json j;
    j["kind"] = to_string(model.kind);
    j["K"] = model.K;
    if (model.kind == RuleKind::AD || model.kind == RuleKind::SAD) {
        std::vector<std::vector<double>> b;
        for (Eigen::Index r = 0; r < model.B.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(model.B.cols()));
            for (Eigen::Index c = 0; c < model.B.cols(); ++c)
                row[static_cast<std::size_t>(c)] = model.B(r, c);
            b.push_back(std::move(row));
        }
        j["B"] = b;
    } else {
        std::vector<double> beta(model.beta.data(), model.beta.data() + model.beta.size());
        j["beta"] = beta;
    }
    if (model.main_effect) {
        const Vector& m = model.main_effect->coefficients;
        j["main_effect"] = std::vector<double>(m.data(), m.data() + m.size());
    }
    j["lambda"] = model.lambda;
    if (!model.resid_family.empty()) j["resid_family"] = model.resid_family;
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path);
    out << j.dump(2) << "\n";
}

ITRModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed model file: ") + e.what());
    }
    ITRModel model;
    model.kind = rule_kind_from_string(j.at("kind").get<std::string>());
    model.K = j.at("K").get<int>();
    if (j.contains("B")) {
        auto b = j["B"].get<std::vector<std::vector<double>>>();
        model.B.resize(static_cast<Eigen::Index>(b.size()),
                       static_cast<Eigen::Index>(b.empty() ? 0 : b[0].size()));
        for (std::size_t r = 0; r < b.size(); ++r)
            for (std::size_t c = 0; c < b[r].size(); ++c)
                model.B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    b[r][c];
    } else {
        auto beta = j.at("beta").get<std::vector<double>>();
        model.beta = Eigen::Map<const Vector>(beta.data(),
                                              static_cast<Eigen::Index>(beta.size()));
    }
    if (j.contains("main_effect")) {
        auto m = j["main_effect"].get<std::vector<double>>();
        FitResult fr;
        fr.coefficients =
            Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
        model.main_effect = std::move(fr);
    }
    if (j.contains("lambda")) model.lambda = j["lambda"].get<double>();
    if (j.contains("resid_family"))
        model.resid_family = j["resid_family"].get<std::string>();
    return model;
}

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
    auto to_int = [&](const std::string& v) {
        try {
            return std::stoi(v);
        } catch (const std::exception&) {
            throw InvalidConfig("bad integer for " + key + ": " + v);
        }
    };
    if (key == "mode") {
        if (value == "simulate") config.mode = RunMode::Simulate;
        else if (value == "fit") config.mode = RunMode::Fit;
        else if (value == "evaluate") config.mode = RunMode::Evaluate;
        else if (value == "mccv") config.mode = RunMode::Mccv;
        else throw InvalidConfig("unknown mode: " + value);
    } else if (key == "scenario") {
        config.scenario_id = to_int(value);
    } else if (key == "method") {
        config.method = rule_kind_from_string(value);
    } else if (key == "n") {
        config.n = to_int(value);
    } else if (key == "p") {
        config.p = to_int(value);
    } else if (key == "reps" || key == "iterations") {
        config.reps = to_int(value);
    } else if (key == "n_test") {
        config.n_test = to_int(value);
    } else if (key == "folds") {
        config.folds = to_int(value);
        config.reg.cv_folds = config.folds;
        config.residvar.folds = config.folds;
    } else if (key == "seed") {
        config.seed = std::stoull(value);
    } else if (key == "threads") {
        config.threads = to_int(value);
    } else if (key == "reg") {
        if (value == "none") config.reg = Regularization::none();
        else if (value == "cv") config.reg = Regularization::lasso_cv();
        else if (value.rfind("lasso:", 0) == 0)
            config.reg = Regularization::lasso(std::stod(value.substr(6)));
        else throw InvalidConfig("unknown regularization: " + value);
    } else if (key == "residvar") {
        config.residvar.candidates.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, '+'))
            config.residvar.candidates.push_back(var_family_from_string(item));
        if (config.residvar.candidates.empty())
            throw InvalidConfig("no residual-model candidates in: " + value);
    } else if (key == "input") {
        config.input_path = value;
    } else if (key == "model") {
        config.model_path = value;
    } else if (key == "output") {
        config.output_path = value;
    } else if (key == "format") {
        config.output_format = value;
    } else if (key == "outcome_col") {
        config.schema.outcome = value;
    } else if (key == "treatment_col") {
        config.schema.treatment = value;
    } else if (key == "propensity") {
        if (value == "estimate") {
            config.schema.propensity_source = PropensitySource::Estimate;
        } else if (value.rfind("column:", 0) == 0) {
            config.schema.propensity_source = PropensitySource::Column;
            config.schema.propensity_column = value.substr(7);
        } else if (value.rfind("constant:", 0) == 0) {
            config.schema.propensity_source = PropensitySource::Constant;
            config.schema.propensity_constant = std::stod(value.substr(9));
        } else {
            throw InvalidConfig("unknown propensity source: " + value);
        }
    } else if (key == "K") {
        config.schema.K = to_int(value);
    } else if (key == "map01") {
        config.schema.map01 = value == "1" || value == "true";
    } else {
        throw InvalidConfig("unknown configuration key: " + key);
    }
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    ExperimentConfig config;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig("expected key=value, got: " + line);
        auto trim = [](std::string s) {
            auto b2 = s.find_first_not_of(" \t");
            auto e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

std::map<std::string, std::string> describe(const ExperimentConfig& config) {
    std::map<std::string, std::string> echo;
    switch (config.mode) {
        case RunMode::Simulate: echo["mode"] = "simulate"; break;
        case RunMode::Fit: echo["mode"] = "fit"; break;
        case RunMode::Evaluate: echo["mode"] = "evaluate"; break;
        case RunMode::Mccv: echo["mode"] = "mccv"; break;
    }
    echo["method"] = to_string(config.method);
    if (config.mode == RunMode::Simulate)
        echo["scenario"] = std::to_string(config.scenario_id);
    if (!config.input_path.empty()) echo["input"] = config.input_path;
    echo["n"] = std::to_string(config.n);
    echo["p"] = std::to_string(config.p);
    echo["reps"] = std::to_string(config.reps);
    echo["n_test"] = std::to_string(config.n_test);
    echo["folds"] = std::to_string(config.folds);
    echo["seed"] = std::to_string(config.seed);
    switch (config.reg.kind) {
        case Regularization::Kind::None: echo["reg"] = "none"; break;
        case Regularization::Kind::LassoFixed:
            echo["reg"] = "lasso:" + fmt_double(config.reg.lambda);
            break;
        case Regularization::Kind::LassoCV: echo["reg"] = "cv"; break;
    }
    std::string families;
    for (const auto& f : config.residvar.candidates) {
        if (!families.empty()) families += '+';
        families += to_string(f);
    }
    echo["residvar"] = families;
    return echo;
}

} // namespace dlearn
