#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dlearn/dgp.hpp"
#include "dlearn/learners.hpp"
#include "dlearn/metrics.hpp"
#include "dlearn/rng.hpp"

using namespace dlearn;

namespace {

// Zero-noise binary data: R = delta(x) * a with delta(x) = x' gamma.
Dataset exact_binary(Rng& rng, int n, const Vector& gamma, double pi = 0.5) {
    const int p = static_cast<int>(gamma.size());
    Matrix x(n, p);
    x.col(0).setOnes();
    Eigen::VectorXi a(n);
    Vector r(n), prop = Vector::Constant(n, pi);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j < p; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        a[i] = rng.uniform01() < pi ? 1 : -1;
        r[i] = x.row(i).dot(gamma) * a[i];
    }
    return Dataset::binary(DesignMatrix::from_design(x), a, r, prop);
}

} // namespace

TEST_CASE("D-Learning exact recovery without noise") {
    Rng rng(3);
    Vector gamma(4);
    gamma << 0.5, -1.0, 0.25, 2.0;
    auto data = exact_binary(rng, 80, gamma);
    auto model = fit_dlearning(data, Regularization::none());
    CHECK((model.beta - 2.0 * gamma).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("D-Learning with constant propensity equals unweighted fit") {
    Rng rng(5);
    const int n = 100, p = 4;
    Matrix x(n, p);
    x.col(0).setOnes();
    Eigen::VectorXi a(n);
    Vector r(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j < p; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        a[i] = rng.uniform01() < 0.5 ? 1 : -1;
        r[i] = x(i, 1) * a[i] + rng.normal();
    }
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(n, 0.5));
    auto model = fit_dlearning(data, Regularization::none());

    Vector pseudo(n);
    for (int i = 0; i < n; ++i) pseudo[i] = 2.0 * r[i] * a[i];
    auto unweighted = fit_wls(x, pseudo, Vector::Ones(n));
    CHECK((model.beta - unweighted.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("D-Learning propensity-scale invariance") {
    Rng rng(7);
    Vector gamma(3);
    gamma << 0.2, 1.0, -0.7;
    auto data = exact_binary(rng, 60, gamma);
    for (Eigen::Index i = 0; i < data.n(); ++i)
        data.R[i] += rng.normal(); // add noise so the fit is not exact
    auto a = fit_dlearning(data, Regularization::none());
    Dataset scaled = data;
    scaled.pi *= 0.6;
    auto b = fit_dlearning(scaled, Regularization::none());
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("D-Learning rejects multi-arm data") {
    Rng rng(9);
    Matrix x = Matrix::Ones(10, 1);
    Eigen::VectorXi a(10);
    for (int i = 0; i < 10; ++i) a[i] = 1 + i % 3;
    auto data = Dataset::multi_arm(DesignMatrix::from_design(x), a,
                                   Vector::Zero(10), Vector::Constant(10, 1.0 / 3), 3);
    CHECK_THROWS_AS(fit_dlearning(data, Regularization::none()), InvalidMode);
}

TEST_CASE("RD-Learning removes an exactly linear main effect") {
    // arms paired at each covariate point so the treatment term is exactly
    // orthogonal to the covariates
    Rng rng(11);
    Vector gamma(3), alpha(3);
    gamma << 0.5, -1.0, 0.8;
    alpha << 2.0, 3.0, -1.5;
    const int half = 40;
    Matrix x(2 * half, 3);
    Eigen::VectorXi a(2 * half);
    Vector r(2 * half);
    for (int i = 0; i < half; ++i) {
        Eigen::RowVectorXd row(3);
        row << 1.0, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        x.row(2 * i) = row;
        x.row(2 * i + 1) = row;
        a[2 * i] = 1;
        a[2 * i + 1] = -1;
        r[2 * i] = row.dot(alpha) + row.dot(gamma);
        r[2 * i + 1] = row.dot(alpha) - row.dot(gamma);
    }
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(2 * half, 0.5));
    auto model = fit_rdlearning(data, Regularization::none(), Regularization::none());
    CHECK((model.beta - 2.0 * gamma).cwiseAbs().maxCoeff() < 1e-7);
    REQUIRE(model.main_effect.has_value());
    CHECK((model.main_effect->coefficients - alpha).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("RD-Learning with a zero main effect matches D-Learning") {
    // paired arms at each covariate point make the fitted main effect exactly 0
    Rng rng(13);
    const int half = 30, p = 3;
    Matrix x(2 * half, p);
    Eigen::VectorXi a(2 * half);
    Vector r(2 * half);
    for (int i = 0; i < half; ++i) {
        Eigen::RowVectorXd row(p);
        row << 1.0, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        double delta = 0.4 * row[1] - row[2];
        x.row(2 * i) = row;
        x.row(2 * i + 1) = row;
        a[2 * i] = 1;
        a[2 * i + 1] = -1;
        r[2 * i] = delta;
        r[2 * i + 1] = -delta;
    }
    auto data = Dataset::binary(DesignMatrix::from_design(x), a, r,
                                Vector::Constant(2 * half, 0.5));
    auto rd = fit_rdlearning(data, Regularization::none(), Regularization::none());
    auto d = fit_dlearning(data, Regularization::none());
    CHECK(rd.main_effect->coefficients.cwiseAbs().maxCoeff() < 1e-9);
    CHECK((rd.beta - d.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("RD-Learning invariant to main-effect shifts in the exact case") {
    Rng rng(15);
    Vector gamma(3);
    gamma << 0.3, 1.2, -0.4;
    auto data = exact_binary(rng, 60, gamma);
    auto base = fit_rdlearning(data, Regularization::none(), Regularization::none());
    Dataset shifted = data;
    Vector c(3);
    c << 1.0, -2.0, 0.5;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        shifted.R[i] += shifted.X.values.row(i).dot(c);
    auto moved = fit_rdlearning(shifted, Regularization::none(), Regularization::none());
    CHECK((base.beta - moved.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("AD-Learning exact recovery on a complete factorial design") {
    Rng rng(17);
    const int K = 4, p = 3, npts = 25;
    auto simplex = simplex_vertices(K);
    Matrix coef(p, K); // delta_a(x) = x' coef.col(a-1), saturated linear effects
    for (int i = 0; i < p; ++i)
        for (int k = 0; k < K; ++k) coef(i, k) = rng.normal();

    Matrix x(npts * K, p);
    Eigen::VectorXi a(npts * K);
    Vector r(npts * K);
    std::vector<Eigen::RowVectorXd> points;
    for (int i = 0; i < npts; ++i) {
        Eigen::RowVectorXd row(p);
        row << 1.0, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        points.push_back(row);
        for (int k = 0; k < K; ++k) {
            x.row(i * K + k) = row;
            a[i * K + k] = k + 1;
            double m = 0.7 * row[1]; // shared main effect
            r[i * K + k] = m + row.dot(coef.col(k));
        }
    }
    auto data = Dataset::multi_arm(DesignMatrix::from_design(x), a, r,
                                   Vector::Constant(npts * K, 0.25), K);
    auto model = fit_adlearning(data, Regularization::none());

    // oracle: with sum_a u_a u_a' = K/(K-1) I and the pseudo-outcome scale
    // K/(K-1), the per-x score is exactly sum_a delta_a(x) u_a
    for (const auto& row : points) {
        Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(K - 1);
        double m = 0.7 * row[1];
        for (int k = 0; k < K; ++k)
            expected += (m + row.dot(coef.col(k))) * simplex.vertex(k + 1);
        Eigen::RowVectorXd got = row * model.B;
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("AD-Learning at K=2 decides like D-Learning") {
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(derive_seed(900, trial));
        const int n = 80, p = 4;
        Matrix x(n, p);
        x.col(0).setOnes();
        Eigen::VectorXi a_bin(n), a_lab(n);
        Vector r(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 1; j < p; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
            bool plus = rng.uniform01() < 0.5;
            a_bin[i] = plus ? 1 : -1;
            a_lab[i] = plus ? 1 : 2; // +1 -> arm 1, -1 -> arm 2
            r[i] = 0.5 * x(i, 1) * a_bin[i] + 0.3 * x(i, 2) + 0.4 * rng.normal();
        }
        auto design = DesignMatrix::from_design(x);
        auto bin = Dataset::binary(design, a_bin, r, Vector::Constant(n, 0.5));
        auto multi = Dataset::multi_arm(design, a_lab, r, Vector::Constant(n, 0.5), 2);
        auto d = fit_dlearning(bin, Regularization::none());
        auto ad = fit_adlearning(multi, Regularization::none());
        for (int t = 0; t < 50; ++t) {
            Eigen::RowVectorXd xt(p);
            xt << 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
            int from_d = predict_rule(d, xt);
            int from_ad = predict_rule(ad, xt); // arm labels 1/2
            CHECK(from_d == (from_ad == 1 ? 1 : -1));
        }
    }
}

TEST_CASE("AD-Learning rejects out-of-range arm labels") {
    Matrix x = Matrix::Ones(4, 1);
    Eigen::VectorXi a(4);
    a << 1, 2, 3, 3;
    CHECK_THROWS_AS(Dataset::multi_arm(DesignMatrix::from_design(x), a,
                                       Vector::Zero(4), Vector::Constant(4, 0.5), 2),
                    InvalidInput);
}

TEST_CASE("predict_rule sign conventions") {
    ITRModel model;
    model.kind = RuleKind::D;
    model.beta = Vector(2);
    model.beta << 0.1, 0.2;
    Eigen::RowVectorXd x(2);
    x << 1.0, 1.0; // score 0.3
    CHECK(predict_rule(model, x) == 1);
    model.beta << 0.2, -0.2; // score exactly 0
    CHECK(predict_rule(model, x) == 1);
    model.beta << -0.5, 0.2;
    CHECK(predict_rule(model, x) == -1);
}

TEST_CASE("predict_rule multi-arm argmax via rank scores") {
    const int K = 4;
    auto simplex = simplex_vertices(K);
    Vector delta(K);
    delta << 1, 5, 2, 0;
    Eigen::RowVectorXd f = Eigen::RowVectorXd::Zero(K - 1);
    for (int k = 0; k < K; ++k) f += delta[k] * simplex.vertex(k + 1);
    ITRModel model;
    model.kind = RuleKind::AD;
    model.K = K;
    model.B = Matrix(1, K - 1);
    model.B.row(0) = f; // x = [1] makes B'x = f
    Eigen::RowVectorXd x(1);
    x << 1.0;
    CHECK(predict_rule(model, x) == 2);
}

TEST_CASE("decision_scores") {
    ITRModel model;
    model.kind = RuleKind::D;
    model.beta = Vector(2);
    model.beta << 1.0, 2.0;
    Eigen::RowVectorXd x(2);
    x << 1.0, 0.5;
    Vector s = decision_scores(model, x);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == doctest::Approx(2.0));

    ITRModel multi;
    multi.kind = RuleKind::AD;
    multi.K = 2;
    multi.B = Matrix(2, 1);
    multi.B << 0.4, -0.3;
    Vector s2 = decision_scores(multi, x);
    REQUIRE(s2.size() == 2);
    CHECK(s2[0] + s2[1] == doctest::Approx(0.0));
}

TEST_CASE("decision_scores argmax agrees with predict_rule") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        ITRModel model;
        model.kind = RuleKind::AD;
        model.K = 3;
        model.B = Matrix(3, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) model.B(i, j) = rng.normal();
        Eigen::RowVectorXd x(3);
        x << 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1);
        Vector s = decision_scores(model, x);
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (s[k] > s[best]) best = k;
        CHECK(predict_rule(model, x) == best + 1);
    }
}

TEST_CASE("decision_scores dimension mismatch") {
    ITRModel model;
    model.kind = RuleKind::D;
    model.beta = Vector::Ones(3);
    Eigen::RowVectorXd x(2);
    x << 1.0, 1.0;
    CHECK_THROWS_AS(decision_scores(model, x), InvalidInput);
}

TEST_CASE("D-Learning APE shrinks with sample size") {
    auto spec = scenario(2);
    std::vector<double> medians;
    for (int n : {200, 2000, 20000}) {
        std::vector<double> apes;
        for (int rep = 0; rep < 20; ++rep) {
            auto train = generate(spec, n, spec.min_p, derive_seed(5000, rep));
            auto model = fit_dlearning(train.data, Regularization::none());
            auto test = generate(spec, 2000, spec.min_p, derive_seed(6000, rep));
            apes.push_back(ape(model, test.data.X.values, test.opt_scores));
        }
        std::sort(apes.begin(), apes.end());
        medians.push_back(0.5 * (apes[9] + apes[10]));
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}
