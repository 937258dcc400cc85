#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "dlearn/dgp.hpp"
#include "dlearn/metrics.hpp"
#include "dlearn/stabilizer.hpp"

using namespace dlearn;

namespace {

ResidvarConfig fast_residvar(std::uint64_t seed) {
    ResidvarConfig rv;
    rv.seed = seed;
    rv.hyperparams.forest.n_trees = 100;
    rv.hyperparams.forest_tree_grid = {100};
    rv.hyperparams.forest_leaf_grid = {5};
    return rv;
}

} // namespace

TEST_CASE("squared_residuals basics") {
    Matrix x(1, 2);
    x << 1.0, 0.0;
    Eigen::VectorXi a(1);
    a << 1;
    Vector r(1);
    r << 1.5; // 2ra = 3
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(1, 0.5));
    ITRModel model;
    model.kind = RuleKind::D;
    model.beta = Vector(2);
    model.beta << 1.0, 0.0; // fitted value 1
    Vector sq = squared_residuals(data, model);
    REQUIRE(sq.size() == 1);
    CHECK(sq[0] == doctest::Approx(4.0));
}

TEST_CASE("squared_residuals vanish on an exact fit") {
    Rng rng(3);
    const int n = 50;
    Matrix x(n, 2);
    x.col(0).setOnes();
    Eigen::VectorXi a(n);
    Vector r(n);
    for (int i = 0; i < n; ++i) {
        x(i, 1) = rng.uniform(-1.0, 1.0);
        a[i] = rng.uniform01() < 0.5 ? 1 : -1;
        r[i] = (0.5 - x(i, 1)) * a[i];
    }
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(n, 0.5));
    auto model = fit_dlearning(data, Regularization::none());
    Vector sq = squared_residuals(data, model);
    CHECK(sq.maxCoeff() < 1e-16);
    CHECK(sq.minCoeff() >= 0.0);
}

TEST_CASE("squared_residuals mode mismatch") {
    Matrix x = Matrix::Ones(4, 1);
    Eigen::VectorXi a(4);
    a << 1, 2, 1, 2;
    auto data = Dataset::multi_arm(DesignMatrix::from_design(x), a, Vector::Zero(4),
                                   Vector::Constant(4, 0.5), 2);
    ITRModel model;
    model.kind = RuleKind::D;
    model.beta = Vector::Ones(1);
    CHECK_THROWS_AS(squared_residuals(data, model), InvalidMode);
}

TEST_CASE("oracle stabilization with constant variance equals the base fit") {
    auto labeled = generate(scenario(1), 150, 4, 11);
    auto base = fit_dlearning(labeled.data, Regularization::none());
    auto flat = oracle_stabilize(labeled.data, RuleKind::D,
                                 [](int, const Eigen::RowVectorXd&) { return 3.0; },
                                 Regularization::none());
    CHECK(flat.kind == RuleKind::SD);
    CHECK((flat.beta - base.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("oracle stabilization is invariant to variance scale") {
    auto labeled = generate(scenario(2), 200, 4, 13);
    auto sigma = [](int, const Eigen::RowVectorXd& x) {
        return 0.25 + (x[2] + 1.0) * (x[2] + 1.0);
    };
    auto scaled = [&](int a, const Eigen::RowVectorXd& x) { return 7.0 * sigma(a, x); };
    auto m1 = oracle_stabilize(labeled.data, RuleKind::D, sigma, Regularization::none());
    auto m2 = oracle_stabilize(labeled.data, RuleKind::D, scaled, Regularization::none());
    CHECK((m1.beta - m2.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("oracle stabilization rejects nonpositive variance") {
    auto labeled = generate(scenario(1), 30, 3, 17);
    CHECK_THROWS_AS(
        oracle_stabilize(labeled.data, RuleKind::D,
                         [](int, const Eigen::RowVectorXd&) { return 0.0; },
                         Regularization::none()),
        InvalidInput);
}

TEST_CASE("two-block toy: stabilization discards the noisy block") {
    Rng rng(19);
    const int n = 40, half = 20;
    Matrix x(n, 2);
    x.col(0).setOnes();
    Eigen::VectorXi a(n);
    Vector r(n);
    Vector gamma(2);
    gamma << 0.4, 1.2;
    for (int i = 0; i < n; ++i) {
        x(i, 1) = rng.uniform(-1.0, 1.0);
        a[i] = rng.uniform01() < 0.5 ? 1 : -1;
        double sd = i < half ? 0.1 : 10.0;
        r[i] = x.row(i).dot(gamma) * a[i] + sd * rng.normal();
    }
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(n, 0.5));
    auto oracle = [&](int, const Eigen::RowVectorXd& xr) {
        // identify the block through the stored covariate value
        for (int i = 0; i < n; ++i)
            if (x(i, 1) == xr[1]) return i < half ? 0.01 : 100.0;
        return 100.0;
    };
    auto stab = oracle_stabilize(data, RuleKind::D, oracle, Regularization::none());

    std::vector<Eigen::Index> clean;
    for (Eigen::Index i = 0; i < half; ++i) clean.push_back(i);
    auto clean_fit = fit_dlearning(data.subset(clean), Regularization::none());
    CHECK((stab.beta - clean_fit.beta).cwiseAbs().maxCoeff() < 0.05);
}

// Variance of the working residual 2RA - X'beta0 given (A, X): the 2mA term
// survives, so the optimal weight is 1 / (4 m(x)^2 + 4 sigma0^2(x)).
static std::function<double(int, const Eigen::RowVectorXd&)>
working_sigma2(const ScenarioSpec& spec) {
    return [&spec](int, const Eigen::RowVectorXd& row) {
        Eigen::RowVectorXd x = row.tail(row.size() - 1); // drop the intercept
        double m = spec.main_effect(x);
        return 4.0 * m * m + 4.0 * spec.sigma2(x);
    };
}

TEST_CASE("oracle stabilization beats D-Learning APE under heteroscedasticity") {
    auto spec = scenario(2);
    auto sigma = working_sigma2(spec);
    // the long-run win rate is about 0.90, so 100 replications would sit on
    // the binomial noise boundary; 400 replications with a 2-sigma allowance
    // test the same claim stably
    int wins = 0;
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep) {
        auto train = generate(spec, 2000, spec.min_p, derive_seed(100, rep));
        auto d = fit_dlearning(train.data, Regularization::none());
        auto sd = oracle_stabilize(train.data, RuleKind::D, sigma,
                                   Regularization::none());
        auto test = generate(spec, 10000, spec.min_p, derive_seed(200, rep));
        double ape_d = ape(d, test.data.X.values, test.opt_scores);
        double ape_sd = ape(sd, test.data.X.values, test.opt_scores);
        if (ape_sd <= ape_d) ++wins;
    }
    CHECK(wins >= static_cast<int>(reps * 0.87));
}

TEST_CASE("oracle stabilization shrinks coefficient variance") {
    for (int id : {2, 3}) {
        auto spec = scenario(id);
        auto sigma = working_sigma2(spec);
        const int reps = 200, p = spec.min_p + 1;
        Matrix d_coef(reps, p), s_coef(reps, p);
        for (int rep = 0; rep < reps; ++rep) {
            auto train = generate(spec, 500, spec.min_p, derive_seed(300 + id, rep));
            d_coef.row(rep) =
                fit_dlearning(train.data, Regularization::none()).beta.transpose();
            s_coef.row(rep) = oracle_stabilize(train.data, RuleKind::D, sigma,
                                               Regularization::none())
                                  .beta.transpose();
        }
        int better = 0;
        for (int j = 0; j < p; ++j) {
            auto var = [&](const Matrix& m) {
                double mean = m.col(j).mean();
                return (m.col(j).array() - mean).square().sum() / (reps - 1);
            };
            if (var(s_coef) <= var(d_coef)) ++better;
        }
        CHECK(better * 5 >= p * 4); // at least 80% of coordinates
    }
}

TEST_CASE("stabilize attaches variance model and exact sandwich covariance") {
    auto labeled = generate(scenario(2), 200, 5, 23);
    auto rv = fast_residvar(7);
    auto model = stabilize(labeled.data, RuleKind::D, rv, Regularization::lasso_cv(3));
    CHECK(model.kind == RuleKind::SD);
    REQUIRE(model.variance_model != nullptr);
    REQUIRE(model.covariance.has_value());
    CHECK(!model.resid_family.empty());

    Matrix features = build_variance_features(labeled.data);
    Vector s2 = model.variance_model->predict_all(features);
    auto expected = sandwich_covariance(labeled.data.X.values, s2);
    CHECK((model.covariance->matrix - expected.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stabilized pipeline is deterministic") {
    auto labeled = generate(scenario(2), 150, 5, 29);
    auto rv = fast_residvar(11);
    auto a = stabilize(labeled.data, RuleKind::D, rv, Regularization::lasso_cv(5));
    auto b = stabilize(labeled.data, RuleKind::D, rv, Regularization::lasso_cv(5));
    CHECK(a.beta == b.beta);
    CHECK(a.lambda == b.lambda);
    CHECK(a.resid_family == b.resid_family);
    Matrix features = build_variance_features(labeled.data);
    CHECK(a.variance_model->predict_all(features) ==
          b.variance_model->predict_all(features));
}

TEST_CASE("stabilized RD keeps the main effect and upgrades the kind") {
    auto labeled = generate(scenario(5), 120, 5, 31);
    auto rv = fast_residvar(13);
    auto model = stabilize(labeled.data, RuleKind::RD, rv, Regularization::lasso_cv(7));
    CHECK(model.kind == RuleKind::SRD);
    CHECK(model.main_effect.has_value());
    CHECK(model.variance_model != nullptr);
}

TEST_CASE("stabilized AD handles multi-arm data") {
    auto labeled = generate(scenario(7), 160, 5, 37);
    auto rv = fast_residvar(17);
    auto model = stabilize(labeled.data, RuleKind::AD, rv, Regularization::lasso_cv(9));
    CHECK(model.kind == RuleKind::SAD);
    CHECK(model.B.rows() == labeled.data.p());
    CHECK(model.B.cols() == labeled.data.K - 1);
    REQUIRE(model.covariance.has_value());
    CHECK(model.covariance->matrix.rows() == labeled.data.p() * (labeled.data.K - 1));
}
