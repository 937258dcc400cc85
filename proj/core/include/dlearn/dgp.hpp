#pragma once

#include <cstdint>
#include <functional>

#include "dlearn/dataset.hpp"

namespace dlearn {

// One of the eight simulation data-generating processes. Covariate vectors
// passed to the closed forms hold the raw covariates (index 0 = first
// covariate, no intercept).
struct ScenarioSpec {
    int id = 0;
    TreatmentMode mode = TreatmentMode::Binary;
    int K = 2;
    int min_p = 1;
    std::function<double(const Eigen::RowVectorXd&)> main_effect;
    std::function<double(const Eigen::RowVectorXd&)> delta;          // binary
    std::function<Vector(const Eigen::RowVectorXd&)> deltas;         // multi-arm
    std::function<double(const Eigen::RowVectorXd&)> sigma2;
};

ScenarioSpec scenario(int id);

// Dataset plus the ground truth needed by the evaluation metrics:
// opt_scores is n x 1 (binary, 2*delta) or n x (K-1) (sum_k delta_k u_k);
// opt_arm holds d_opt per row (-1/+1 or 1..K).
struct LabeledDataset {
    Dataset data;
    Matrix opt_scores;
    Eigen::VectorXi opt_arm;
};

// Covariates i.i.d. U[-1,1], arms uniform, outcomes from the scenario's
// closed forms with noise sigma0(x) * Z. Row i depends only on (seed, i), so
// regeneration at any n is bit-identical.
LabeledDataset generate(const ScenarioSpec& spec, int n, int p, std::uint64_t seed);

// Optimal arm at a covariate point: sign(delta) with 0 -> +1, or argmax
// delta_k with ties to the lowest index.
int truth_rule(const ScenarioSpec& spec, const Eigen::RowVectorXd& covariates);

} // namespace dlearn
