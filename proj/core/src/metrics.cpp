#include "dlearn/metrics.hpp"

#include <cmath>

#include "dlearn/encoding.hpp"

namespace dlearn {

namespace {

bool multi_arm_model(const ITRModel& model) {
    return model.kind == RuleKind::AD || model.kind == RuleKind::SAD;
}

} // namespace

double ape(const ITRModel& model, const Matrix& test_design,
           const Matrix& opt_scores) {
    if (opt_scores.rows() != test_design.rows())
        throw InvalidInput("truth score rows mismatch");
    const Eigen::Index n = test_design.rows();
    if (multi_arm_model(model)) {
        if (opt_scores.cols() != model.K - 1)
            throw InvalidMode("multi-arm truth scores must have K-1 columns");
        Matrix est = test_design * model.B;
        return (opt_scores - est).rowwise().squaredNorm().mean();
    }
    if (opt_scores.cols() != 1)
        throw InvalidMode("binary truth scores must have one column");
    Vector est = test_design * model.beta;
    return (opt_scores.col(0) - est).squaredNorm() / static_cast<double>(n);
}

double misclassification(const ITRModel& model, const Matrix& test_design,
                         const Eigen::VectorXi& opt_arm) {
    if (opt_arm.size() != test_design.rows())
        throw InvalidInput("truth arm rows mismatch");
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < test_design.rows(); ++i)
        if (predict_rule(model, test_design.row(i)) != opt_arm[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test_design.rows());
}

double empirical_value(const ITRModel& model, const Dataset& test_data) {
    const bool multi = multi_arm_model(model);
    if (multi != (test_data.mode == TreatmentMode::MultiArm))
        throw InvalidMode("rule and test data treatment modes disagree");
    double numerator = 0.0;
    double denominator = 0.0;
    for (Eigen::Index i = 0; i < test_data.n(); ++i) {
        if (predict_rule(model, test_data.X.values.row(i)) != test_data.A[i]) continue;
        const double inv_pi = 1.0 / test_data.pi[i];
        numerator += test_data.R[i] * inv_pi;
        denominator += inv_pi;
    }
    if (denominator == 0.0)
        throw UndefinedValue("no test row follows the rule; value is 0/0");
    return numerator / denominator;
}

AggregateResult aggregate(const std::vector<EvalResult>& results) {
    if (results.size() < 2)
        throw InvalidInput("aggregation needs at least two replications");
    const double reps = static_cast<double>(results.size());
    auto summarize = [&](auto&& pick) {
        MetricSummary s;
        for (const auto& r : results) s.mean += pick(r);
        s.mean /= reps;
        double ss = 0.0;
        for (const auto& r : results) {
            double d = pick(r) - s.mean;
            ss += d * d;
        }
        s.sem = std::sqrt(ss / (reps - 1.0)) / std::sqrt(reps);
        return s;
    };
    AggregateResult out;
    out.ape = summarize([](const EvalResult& r) { return r.ape; });
    out.misclassification =
        summarize([](const EvalResult& r) { return r.misclassification; });
    out.value = summarize([](const EvalResult& r) { return r.value; });
    out.reps = static_cast<int>(results.size());
    return out;
}

} // namespace dlearn
