#include "dlearn/learners.hpp"

#include <cctype>
#include <cmath>

namespace dlearn {

std::string to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::D: return "D";
        case RuleKind::RD: return "RD";
        case RuleKind::AD: return "AD";
        case RuleKind::SD: return "SD";
        case RuleKind::SRD: return "SRD";
        case RuleKind::SAD: return "SAD";
    }
    return "?";
}

RuleKind rule_kind_from_string(const std::string& name) {
    std::string upper = name;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "D") return RuleKind::D;
    if (upper == "RD") return RuleKind::RD;
    if (upper == "AD") return RuleKind::AD;
    if (upper == "SD") return RuleKind::SD;
    if (upper == "SRD") return RuleKind::SRD;
    if (upper == "SAD") return RuleKind::SAD;
    throw InvalidConfig("unknown method: " + name);
}

bool is_stabilized(RuleKind kind) {
    return kind == RuleKind::SD || kind == RuleKind::SRD || kind == RuleKind::SAD;
}

RuleKind base_of(RuleKind kind) {
    switch (kind) {
        case RuleKind::SD: return RuleKind::D;
        case RuleKind::SRD: return RuleKind::RD;
        case RuleKind::SAD: return RuleKind::AD;
        default: return kind;
    }
}

FitResult fit_linear(const Matrix& design, const Vector& y, const Vector& w,
                     const Regularization& reg, const PenaltyFreeSet& free_cols) {
    switch (reg.kind) {
        case Regularization::Kind::None:
            return fit_wls(design, y, w, 0.0, free_cols);
        case Regularization::Kind::LassoFixed:
            return fit_lasso(design, y, w, reg.lambda, 1e-7, 10000, free_cols);
        case Regularization::Kind::LassoCV: {
            double lmax = lasso_lambda_max(design, y, w, free_cols);
            auto grid = make_lambda_grid(lmax, reg.grid_size, reg.grid_ratio);
            double lambda =
                select_lambda_cv(design, y, w, grid, reg.cv_folds, reg.seed, free_cols);
            return fit_lasso(design, y, w, lambda, 1e-7, 10000, free_cols);
        }
    }
    throw InvalidConfig("unknown regularization kind");
}

namespace {

void require_binary(const Dataset& data) {
    if (data.mode != TreatmentMode::Binary)
        throw InvalidMode("binary learner called on multi-arm data");
}

} // namespace

ITRModel fit_dlearning(const Dataset& data, const Regularization& reg) {
    require_binary(data);
    Vector pseudo(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i)
        pseudo[i] = 2.0 * data.R[i] * data.A[i];
    Vector w = data.pi.cwiseInverse();
    FitResult fit = fit_linear(data.X.values, pseudo, w, reg);

    ITRModel model;
    model.kind = RuleKind::D;
    model.K = 2;
    model.beta = fit.coefficients;
    model.lambda = fit.lambda;
    return model;
}

ITRModel fit_rdlearning(const Dataset& data, const Regularization& main_reg,
                        const Regularization& interaction_reg) {
    require_binary(data);
    Vector w = data.pi.cwiseInverse();
    FitResult main = fit_linear(data.X.values, data.R, w, main_reg);

    Dataset residualized = data;
    residualized.R = data.R - data.X.values * main.coefficients;
    ITRModel model = fit_dlearning(residualized, interaction_reg);
    model.kind = RuleKind::RD;
    model.main_effect = std::move(main);
    return model;
}

ITRModel fit_adlearning(const Dataset& data, const Regularization& reg) {
    if (data.mode != TreatmentMode::MultiArm)
        throw InvalidMode("AD-Learning requires multi-arm data");
    const int K = data.K;
    SimplexVertices simplex = simplex_vertices(K);
    Matrix encoded = encode_design(data.X.values, data.A, simplex);
    const double scale = static_cast<double>(K) / (K - 1);
    Vector pseudo = scale * data.R;
    Vector w = data.pi.cwiseInverse();

    // The intercept row of B occupies the first K-1 encoded columns.
    PenaltyFreeSet free_cols;
    for (int j = 0; j < K - 1; ++j) free_cols.push_back(j);
    FitResult fit = fit_linear(encoded, pseudo, w, reg, free_cols);

    ITRModel model;
    model.kind = RuleKind::AD;
    model.K = K;
    model.B = devectorize(fit.coefficients, static_cast<int>(data.p()), K);
    model.lambda = fit.lambda;
    return model;
}

Vector decision_scores(const ITRModel& model, const Eigen::RowVectorXd& x) {
    if (x.size() != model.p()) throw InvalidInput("covariate row dimension mismatch");
    if (model.kind == RuleKind::AD || model.kind == RuleKind::SAD) {
        SimplexVertices simplex = simplex_vertices(model.K);
        Vector f = model.B.transpose() * x.transpose();
        return simplex.vertices * f;
    }
    Vector score(1);
    score[0] = x.dot(model.beta);
    return score;
}

int predict_rule(const ITRModel& model, const Eigen::RowVectorXd& x) {
    Vector scores = decision_scores(model, x);
    if (model.kind == RuleKind::AD || model.kind == RuleKind::SAD) {
        int best = 1;
        for (int k = 2; k <= model.K; ++k)
            if (scores[k - 1] > scores[best - 1]) best = k;
        return best;
    }
    return scores[0] >= 0.0 ? 1 : -1;
}

} // namespace dlearn
