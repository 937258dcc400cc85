#include "dlearn/stabilizer.hpp"

#include <cmath>

namespace dlearn {

namespace {

Vector working_pseudo_outcome(const Dataset& data, const ITRModel& model) {
    Vector pseudo(data.n());
    if (model.kind == RuleKind::AD || model.kind == RuleKind::SAD) {
        const double scale = static_cast<double>(data.K) / (data.K - 1);
        pseudo = scale * data.R;
        return pseudo;
    }
    Vector outcome = data.R;
    if (model.kind == RuleKind::RD || model.kind == RuleKind::SRD) {
        if (!model.main_effect)
            throw InvalidMode("RD model is missing its main-effect fit");
        outcome -= data.X.values * model.main_effect->coefficients;
    }
    for (Eigen::Index i = 0; i < data.n(); ++i)
        pseudo[i] = 2.0 * outcome[i] * data.A[i];
    return pseudo;
}

void check_mode_match(const Dataset& data, RuleKind kind) {
    const bool multi = kind == RuleKind::AD || kind == RuleKind::SAD;
    if (multi && data.mode != TreatmentMode::MultiArm)
        throw InvalidMode("multi-arm model applied to binary data");
    if (!multi && data.mode != TreatmentMode::Binary)
        throw InvalidMode("binary model applied to multi-arm data");
}

} // namespace

Vector squared_residuals(const Dataset& data, const ITRModel& model) {
    check_mode_match(data, model.kind);
    Vector pseudo = working_pseudo_outcome(data, model);
    Vector fitted(data.n());
    if (model.kind == RuleKind::AD || model.kind == RuleKind::SAD) {
        SimplexVertices simplex = simplex_vertices(data.K);
        Matrix encoded = encode_design(data.X.values, data.A, simplex);
        fitted = encoded * vectorize(model.B);
    } else {
        fitted = data.X.values * model.beta;
    }
    Vector resid = pseudo - fitted;
    return resid.cwiseProduct(resid);
}

namespace {

ITRModel fit_base(const Dataset& data, RuleKind base_kind, const Regularization& reg) {
    switch (base_kind) {
        case RuleKind::D: return fit_dlearning(data, reg);
        case RuleKind::RD: return fit_rdlearning(data, reg, reg);
        case RuleKind::AD: return fit_adlearning(data, reg);
        default:
            throw InvalidConfig("stabilize expects a base kind (D, RD or AD)");
    }
}

RuleKind stabilized_kind(RuleKind base_kind) {
    switch (base_kind) {
        case RuleKind::D: return RuleKind::SD;
        case RuleKind::RD: return RuleKind::SRD;
        case RuleKind::AD: return RuleKind::SAD;
        default: return base_kind;
    }
}

// Reweighted refit with row weights 1/sigma2; the propensity cancels out of
// the stabilized objective.
ITRModel refit_weighted(const Dataset& data, RuleKind base_kind,
                        const std::optional<FitResult>& main_effect,
                        const Vector& sigma2, const Regularization& reg) {
    Vector w = sigma2.cwiseInverse();
    ITRModel model;
    model.kind = stabilized_kind(base_kind);
    model.K = data.K;
    if (base_kind == RuleKind::AD) {
        SimplexVertices simplex = simplex_vertices(data.K);
        Matrix encoded = encode_design(data.X.values, data.A, simplex);
        Vector pseudo = (static_cast<double>(data.K) / (data.K - 1)) * data.R;
        PenaltyFreeSet free_cols;
        for (int j = 0; j < data.K - 1; ++j) free_cols.push_back(j);
        FitResult fit = fit_linear(encoded, pseudo, w, reg, free_cols);
        model.B = devectorize(fit.coefficients, static_cast<int>(data.p()), data.K);
        model.lambda = fit.lambda;
        model.covariance = sandwich_covariance(encoded, sigma2);
    } else {
        Vector outcome = data.R;
        if (base_kind == RuleKind::RD)
            outcome -= data.X.values * main_effect->coefficients;
        Vector pseudo(data.n());
        for (Eigen::Index i = 0; i < data.n(); ++i)
            pseudo[i] = 2.0 * outcome[i] * data.A[i];
        FitResult fit = fit_linear(data.X.values, pseudo, w, reg);
        model.beta = fit.coefficients;
        model.lambda = fit.lambda;
        model.covariance = sandwich_covariance(data.X.values, sigma2);
    }
    model.main_effect = main_effect;
    return model;
}

} // namespace

ITRModel stabilize(const Dataset& data, RuleKind base_kind,
                   const ResidvarConfig& residvar_config, const Regularization& reg) {
    ITRModel base = fit_base(data, base_kind, reg);
    Vector sq = squared_residuals(data, base);
    Matrix features = build_variance_features(data);
    const double floor = residvar_config.floor > 0.0
                             ? residvar_config.floor
                             : default_variance_floor(sq);

    FamilySelection selection =
        select_family_cv(features, sq, residvar_config.candidates,
                         residvar_config.folds, derive_seed(residvar_config.seed, 31),
                         residvar_config.hyperparams);
    auto variance_model = std::make_shared<VarianceModel>(
        fit_residual_model(features, sq, selection.family, selection.tuned, floor,
                           derive_seed(residvar_config.seed, 32)));
    Vector sigma2 = variance_model->predict_all(features);

    ITRModel model = refit_weighted(data, base_kind, base.main_effect, sigma2, reg);
    model.variance_model = std::move(variance_model);
    model.resid_family = to_string(selection.family);
    return model;
}

ITRModel oracle_stabilize(const Dataset& data, RuleKind base_kind,
                          const TrueSigma2& true_sigma2, const Regularization& reg) {
    std::optional<FitResult> main_effect;
    if (base_kind == RuleKind::RD) {
        Vector w = data.pi.cwiseInverse();
        main_effect = fit_linear(data.X.values, data.R, w, reg);
    } else if (base_kind != RuleKind::D && base_kind != RuleKind::AD) {
        throw InvalidConfig("oracle_stabilize expects a base kind (D, RD or AD)");
    }

    Vector sigma2(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        sigma2[i] = true_sigma2(data.A[i], data.X.values.row(i));
        if (!std::isfinite(sigma2[i]) || sigma2[i] <= 0.0)
            throw InvalidInput("oracle variance must be finite and positive");
    }
    ITRModel model = refit_weighted(data, base_kind, main_effect, sigma2, reg);
    model.resid_family = "oracle";
    return model;
}

} // namespace dlearn
