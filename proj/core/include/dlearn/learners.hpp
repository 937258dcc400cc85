#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "dlearn/dataset.hpp"
#include "dlearn/encoding.hpp"
#include "dlearn/linmod.hpp"

namespace dlearn {

struct VarianceModel; // residvar.hpp

enum class RuleKind { D, RD, AD, SD, SRD, SAD };

std::string to_string(RuleKind kind);
RuleKind rule_kind_from_string(const std::string& name);
bool is_stabilized(RuleKind kind);
RuleKind base_of(RuleKind kind);

// Penalty policy for the least-squares steps.
struct Regularization {
    enum class Kind { None, LassoFixed, LassoCV };
    Kind kind = Kind::LassoCV;
    double lambda = 0.0; // LassoFixed only
    int cv_folds = 5;
    int grid_size = 50;
    double grid_ratio = 1e-3;
    std::uint64_t seed = 0;

    static Regularization none() { return {Kind::None, 0.0}; }
    static Regularization lasso(double lambda) { return {Kind::LassoFixed, lambda}; }
    static Regularization lasso_cv(std::uint64_t seed = 0) {
        Regularization r;
        r.kind = Kind::LassoCV;
        r.seed = seed;
        return r;
    }
};

// Shared penalized/unpenalized weighted least-squares entry point; LassoCV
// builds the lambda path from the data.
FitResult fit_linear(const Matrix& design, const Vector& y, const Vector& w,
                     const Regularization& reg, const PenaltyFreeSet& free_cols = {0});

// A fitted decision rule. Binary kinds populate `beta`; multi-arm kinds
// populate `B` (p x (K-1)).
struct ITRModel {
    RuleKind kind = RuleKind::D;
    int K = 2;
    Vector beta;
    Matrix B;
    std::optional<FitResult> main_effect;             // RD / SRD
    std::shared_ptr<const VarianceModel> variance_model; // stabilized kinds
    std::optional<SandwichCovariance> covariance;
    double lambda = 0.0;
    std::string resid_family; // stabilized kinds, for reporting

    Eigen::Index p() const {
        return kind == RuleKind::AD || kind == RuleKind::SAD ? B.rows() : beta.size();
    }
};

// Regression of 2RA on X with weights 1/pi.
ITRModel fit_dlearning(const Dataset& data, const Regularization& reg);

// Main-effect residualization followed by D-Learning.
ITRModel fit_rdlearning(const Dataset& data, const Regularization& main_reg,
                        const Regularization& interaction_reg);

// Angle-based multi-arm regression of K/(K-1) R on the encoded design.
ITRModel fit_adlearning(const Dataset& data, const Regularization& reg);

// Binary: sign(x'beta), 0 -> +1. Multi-arm: argmax_k u_k' B' x, ties to the
// lowest arm index. Binary labels are {-1, +1}.
int predict_rule(const ITRModel& model, const Eigen::RowVectorXd& x);

// x'beta (binary, length 1) or (u_k' B' x)_k (multi-arm, length K).
Vector decision_scores(const ITRModel& model, const Eigen::RowVectorXd& x);

} // namespace dlearn
