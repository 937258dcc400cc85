#pragma once

#include "dlearn/dataset.hpp"
#include "dlearn/learners.hpp"

namespace dlearn {

struct EvalResult {
    double ape = 0.0;
    double misclassification = 0.0;
    double value = 0.0;
    Eigen::Index n_test = 0;
};

// Mean squared distance between true and estimated decision scores.
// opt_scores: n x 1 (binary, the true x'beta0 = 2 delta(x)) or n x (K-1)
// (multi-arm, sum_k delta_k(x) u_k).
double ape(const ITRModel& model, const Matrix& test_design,
           const Matrix& opt_scores);

// Fraction of test rows where the model disagrees with the optimal rule.
double misclassification(const ITRModel& model, const Matrix& test_design,
                         const Eigen::VectorXi& opt_arm);

// Inverse-propensity ratio estimate of the value of the model's rule.
double empirical_value(const ITRModel& model, const Dataset& test_data);

struct MetricSummary {
    double mean = 0.0;
    double sem = 0.0;
};

struct AggregateResult {
    MetricSummary ape;
    MetricSummary misclassification;
    MetricSummary value;
    int reps = 0;
};

AggregateResult aggregate(const std::vector<EvalResult>& results);

} // namespace dlearn
