#pragma once

#include <functional>

#include "dlearn/dataset.hpp"
#include "dlearn/learners.hpp"
#include "dlearn/residvar.hpp"

namespace dlearn {

// Working-model squared residuals of a fitted base model.
// Binary: (2 r a - x'beta)^2, RD with the residualized outcome; multi-arm:
// (K/(K-1) r - u_a' B' x)^2.
Vector squared_residuals(const Dataset& data, const ITRModel& model);

struct ResidvarConfig {
    std::vector<VarFamily> candidates{VarFamily::LinearL1, VarFamily::RandomForest,
                                      VarFamily::GradientBoosting};
    int folds = 5;
    VarHyperparams hyperparams;
    double floor = 0.0; // <= 0: scale-relative default
    std::uint64_t seed = 0;
};

// Full stabilization pipeline: base fit, squared residuals, variance-family
// selection, per-row predicted variance, reweighted refit with weights
// 1/sigma2 (the propensity cancels). Attaches the variance model and the
// sandwich covariance.
ITRModel stabilize(const Dataset& data, RuleKind base_kind,
                   const ResidvarConfig& residvar_config, const Regularization& reg);

// sigma2(arm, covariate row); arm is -1/+1 in binary mode, 1..K otherwise.
using TrueSigma2 = std::function<double(int, const Eigen::RowVectorXd&)>;

// Stabilized refit with a supplied variance function instead of the fitted
// residual model; used to isolate variance-estimation error.
ITRModel oracle_stabilize(const Dataset& data, RuleKind base_kind,
                          const TrueSigma2& true_sigma2, const Regularization& reg);

} // namespace dlearn
