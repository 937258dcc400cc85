#include "dlearn/dgp.hpp"

#include <cmath>

#include "dlearn/encoding.hpp"
#include "dlearn/rng.hpp"

namespace dlearn {

namespace {

using Row = Eigen::RowVectorXd;

double indicator(bool cond) { return cond ? 1.0 : 0.0; }

} // namespace

ScenarioSpec scenario(int id) {
    ScenarioSpec s;
    s.id = id;
    switch (id) {
        case 1:
            s.min_p = 3;
            s.main_effect = [](const Row& x) {
                return 1.0 + 2.0 * x[0] + x[1] + 0.5 * x[2];
            };
            s.delta = [](const Row& x) { return 0.5 * (0.9 - x[0]); };
            s.sigma2 = [](const Row&) { return 1.0; };
            break;
        case 2:
            s.min_p = 3;
            s.main_effect = [](const Row& x) {
                return 1.0 + 12.0 * x[0] + 6.0 * x[1] + 3.0 * x[2];
            };
            s.delta = [](const Row& x) { return 4.0 * x[0]; };
            s.sigma2 = [](const Row& x) {
                return 0.25 + (x[1] + 1.0) * (x[1] + 1.0);
            };
            break;
        case 3:
            s.min_p = 4;
            s.main_effect = [](const Row& x) {
                return 1.0 + 10.0 * x[0] + 10.0 * x[1] + 20.0 * x[2] + 5.0 * x[3];
            };
            s.delta = [](const Row& x) { return 4.0 * (0.3 - x[0] - x[1]); };
            s.sigma2 = [](const Row& x) { return 1.0 + 4.0 * x[2] * x[2]; };
            break;
        case 4:
            s.min_p = 4;
            s.main_effect = [](const Row& x) {
                return 1.0 + 10.0 * x[0] + 6.0 * x[0] * x[0] - 6.0 * x[1] * x[1] +
                       10.0 * x[2];
            };
            s.delta = [](const Row& x) {
                return 2.0 * x[1] * x[1] + 1.5 * x[2] + 3.0 * x[3];
            };
            s.sigma2 = [](const Row& x) {
                double t = 0.3 - x[0] - x[1];
                return 0.25 + t * t;
            };
            break;
        case 5:
            s.min_p = 5;
            s.main_effect = [](const Row& x) {
                return 1.0 + 10.0 * x[0] + 10.0 * x[1] + 20.0 * x[2] + 20.0 * x[4] +
                       10.0 * x[0] * x[1];
            };
            s.delta = [](const Row& x) { return 1.25 * x[2] + 2.5 * x[3]; };
            s.sigma2 = [](const Row& x) { return 1.0 + 0.1 * (1.0 + x[0] * x[0]); };
            break;
        case 6:
            s.min_p = 6;
            s.main_effect = [](const Row& x) {
                double c = std::cos(x[0]);
                return 1.0 + 5.0 * c * c + 10.0 * x[0] * x[1] + 20.0 * x[1] +
                       30.0 * x[4];
            };
            s.delta = [](const Row& x) {
                return 3.0 * x[0] + 2.0 * x[1] + 2.0 * x[4] * x[4];
            };
            s.sigma2 = [](const Row& x) {
                double t = 1.0 - 0.25 * x[5];
                return 0.5 + 0.5 * t * t * t;
            };
            break;
        case 7:
            s.mode = TreatmentMode::MultiArm;
            s.K = 4;
            s.min_p = 4;
            s.main_effect = [](const Row& x) { return 1.0 + 2.0 * x[0] + 2.0 * x[1]; };
            s.deltas = [](const Row& x) {
                Vector d(4);
                d[0] = 0.75 + 1.5 * (x[0] + x[1] + x[2] + x[3]);
                d[1] = 0.75 + 1.5 * x[0] - 1.5 * x[1] - 1.5 * x[2] + 1.5 * x[3];
                d[2] = 0.75 + 1.5 * x[0] - 1.5 * x[1] + 1.5 * x[2] - 1.5 * x[3];
                d[3] = 0.75 - 1.5 * x[0] + 1.5 * x[1] - 1.5 * x[2] + 1.5 * x[3];
                return d;
            };
            s.sigma2 = [](const Row& x) {
                double t = 1.5 - x[1];
                return 0.25 + 0.2 * t * t;
            };
            break;
        case 8:
            s.mode = TreatmentMode::MultiArm;
            s.K = 4;
            s.min_p = 6;
            s.main_effect = [](const Row& x) {
                return 1.0 + x[4] + 3.0 * x[5] + 2.0 * x[0] * x[1];
            };
            s.deltas = [](const Row& x) {
                Vector d(4);
                d[0] = 0.5 + 2.0 * x[0] + x[1] + x[2];
                d[1] = 1.0 + x[0] - x[1] - x[2];
                d[2] = 1.5 + 3.0 * x[0] - x[1] + x[2];
                d[3] = 1.0 - x[0] - x[1] + x[2];
                return d;
            };
            s.sigma2 = [](const Row& x) {
                return 0.5 + 2.0 * x[1] * indicator(x[1] > 0.0);
            };
            break;
        default:
            throw InvalidConfig("scenario id must be 1..8");
    }
    return s;
}

int truth_rule(const ScenarioSpec& spec, const Eigen::RowVectorXd& covariates) {
    if (spec.mode == TreatmentMode::Binary)
        return spec.delta(covariates) >= 0.0 ? 1 : -1;
    Vector d = spec.deltas(covariates);
    int best = 1;
    for (int k = 2; k <= spec.K; ++k)
        if (d[k - 1] > d[best - 1]) best = k;
    return best;
}

LabeledDataset generate(const ScenarioSpec& spec, int n, int p, std::uint64_t seed) {
    if (n < 1) throw InvalidConfig("need at least one row");
    if (p < spec.min_p)
        throw InvalidConfig("scenario " + std::to_string(spec.id) + " needs p >= " +
                            std::to_string(spec.min_p));

    const bool multi = spec.mode == TreatmentMode::MultiArm;
    const int K = multi ? spec.K : 2;
    const int score_cols = multi ? K - 1 : 1;
    SimplexVertices simplex = multi ? simplex_vertices(K) : SimplexVertices{};

    Matrix design(n, p + 1);
    design.col(0).setOnes();
    Eigen::VectorXi arms(n);
    Vector outcomes(n);
    Vector propensity = Vector::Constant(n, multi ? 1.0 / K : 0.5);
    Matrix opt_scores(n, score_cols);
    Eigen::VectorXi opt_arm(n);

    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        for (int j = 0; j < p; ++j) design(i, j + 1) = rng.uniform(-1.0, 1.0);
        Row x = design.row(i).tail(p);

        const double noise = std::sqrt(spec.sigma2(x)) * rng.normal();
        if (multi) {
            int arm = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(K)));
            Vector d = spec.deltas(x);
            arms[i] = arm;
            outcomes[i] = spec.main_effect(x) + d[arm - 1] + noise;
            opt_scores.row(i) = (simplex.vertices.transpose() * d).transpose();
        } else {
            int arm = rng.uniform_int(2) == 0 ? 1 : -1;
            arms[i] = arm;
            outcomes[i] = spec.main_effect(x) + spec.delta(x) * arm + noise;
            opt_scores(i, 0) = 2.0 * spec.delta(x);
        }
        opt_arm[i] = truth_rule(spec, x);
    }

    DesignMatrix X{std::move(design)};
    Dataset data = multi ? Dataset::multi_arm(std::move(X), std::move(arms),
                                              std::move(outcomes),
                                              std::move(propensity), K)
                         : Dataset::binary(std::move(X), std::move(arms),
                                           std::move(outcomes), std::move(propensity));
    return LabeledDataset{std::move(data), std::move(opt_scores), std::move(opt_arm)};
}

} // namespace dlearn
