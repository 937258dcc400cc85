#include <doctest.h>

#include <cmath>

#include "dlearn/encoding.hpp"
#include "dlearn/rng.hpp"

using namespace dlearn;

TEST_CASE("simplex vertices at K=2") {
    auto s = simplex_vertices(2);
    CHECK(s.vertex(1)[0] == doctest::Approx(1.0));
    CHECK(s.vertex(2)[0] == doctest::Approx(-1.0));
}

TEST_CASE("simplex vertices at K=3 match the closed form") {
    auto s = simplex_vertices(3);
    CHECK(s.vertex(1)[0] == doctest::Approx(0.70711).epsilon(1e-4));
    CHECK(s.vertex(1)[1] == doctest::Approx(0.70711).epsilon(1e-4));
    CHECK(s.vertex(2)[0] == doctest::Approx(0.2588).epsilon(1e-3));
    CHECK(s.vertex(2)[1] == doctest::Approx(-0.9659).epsilon(1e-3));
}

TEST_CASE("simplex invariants for K in 2..10") {
    for (int K = 2; K <= 10; ++K) {
        auto s = simplex_vertices(K);
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(K - 1);
        for (int a = 1; a <= K; ++a) {
            CHECK(std::abs(s.vertex(a).norm() - 1.0) < 1e-10);
            sum += s.vertex(a);
            for (int b = a + 1; b <= K; ++b)
                CHECK(std::abs(s.vertex(a).dot(s.vertex(b)) + 1.0 / (K - 1)) < 1e-10);
        }
        CHECK(sum.cwiseAbs().maxCoeff() < 1e-10);

        Matrix gram = Matrix::Zero(K - 1, K - 1);
        for (int a = 1; a <= K; ++a)
            gram += s.vertex(a).transpose() * s.vertex(a);
        Matrix expected =
            static_cast<double>(K) / (K - 1) * Matrix::Identity(K - 1, K - 1);
        CHECK((gram - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("simplex rejects K below 2") {
    CHECK_THROWS_AS(simplex_vertices(1), InvalidConfig);
}

TEST_CASE("encode_row scalars and small Kronecker") {
    Eigen::RowVectorXd x1(1), u1(1);
    x1 << 1;
    u1 << 1;
    Vector e1 = encode_row(x1, u1);
    REQUIRE(e1.size() == 1);
    CHECK(e1[0] == doctest::Approx(1.0));

    Eigen::RowVectorXd x2(2), u2(1);
    x2 << 1, 2;
    u2 << 3;
    Vector e2 = encode_row(x2, u2);
    REQUIRE(e2.size() == 2);
    CHECK(e2[0] == doctest::Approx(3.0));
    CHECK(e2[1] == doctest::Approx(6.0));
}

TEST_CASE("encode_row inner product matches u'B'x") {
    Rng rng(7);
    const int p = 4, K = 5;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::RowVectorXd x(p), u(K - 1);
        for (int j = 0; j < p; ++j) x[j] = rng.normal();
        for (int j = 0; j < K - 1; ++j) u[j] = rng.normal();
        Matrix b(p, K - 1);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < K - 1; ++j) b(i, j) = rng.normal();
        double direct = u * b.transpose() * x.transpose();
        double encoded = encode_row(x, u).dot(vectorize(b));
        CHECK(std::abs(direct - encoded) < 1e-12);
    }
}

TEST_CASE("encode_row bilinearity in x") {
    Rng rng(11);
    Eigen::RowVectorXd x(3), u(2);
    for (int j = 0; j < 3; ++j) x[j] = rng.normal();
    for (int j = 0; j < 2; ++j) u[j] = rng.normal();
    Vector scaled = encode_row(Eigen::RowVectorXd(2.5 * x), u);
    Vector base = encode_row(x, u);
    CHECK((scaled - 2.5 * base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vectorize follows the Vec(B') convention") {
    Matrix b(2, 2);
    b << 1, 2, 3, 4; // rows (a b; c d)
    Vector v = vectorize(b);
    CHECK(v[0] == doctest::Approx(1));
    CHECK(v[1] == doctest::Approx(2));
    CHECK(v[2] == doctest::Approx(3));
    CHECK(v[3] == doctest::Approx(4));
    Matrix back = devectorize(v, 2, 3);
    CHECK((back - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("devectorize p=1 identity reshape") {
    Vector v(3);
    v << 5, 6, 7;
    Matrix b = devectorize(v, 1, 4);
    REQUIRE(b.rows() == 1);
    REQUIRE(b.cols() == 3);
    CHECK(b(0, 0) == doctest::Approx(5));
    CHECK(b(0, 2) == doctest::Approx(7));
}

TEST_CASE("vectorize round trip on random matrices") {
    Rng rng(13);
    Matrix b(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b(i, j) = rng.normal();
    Matrix back = devectorize(vectorize(b), 3, 4);
    CHECK((back - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("devectorize length mismatch") {
    CHECK_THROWS_AS(devectorize(Vector::Zero(5), 2, 3), InvalidInput);
}

TEST_CASE("rank-score monotonicity") {
    Rng rng(17);
    for (int K : {3, 4, 5}) {
        auto s = simplex_vertices(K);
        for (int trial = 0; trial < 1000; ++trial) {
            Vector delta(K);
            for (int k = 0; k < K; ++k) delta[k] = rng.normal();
            Eigen::RowVectorXd f = Eigen::RowVectorXd::Zero(K - 1);
            for (int k = 0; k < K; ++k) f += delta[k] * s.vertex(k + 1);

            int best_score = 0, best_delta = 0;
            double avg = delta.mean();
            for (int k = 0; k < K; ++k) {
                double score = s.vertex(k + 1).dot(f);
                // closed form: K/(K-1) delta_k - K/(K-1) mean(delta)
                double closed = static_cast<double>(K) / (K - 1) * (delta[k] - avg);
                CHECK(std::abs(score - closed) < 1e-10);
                if (score > s.vertex(best_score + 1).dot(f)) best_score = k;
                if (delta[k] > delta[best_delta]) best_delta = k;
            }
            CHECK(best_score == best_delta);
        }
    }
}
