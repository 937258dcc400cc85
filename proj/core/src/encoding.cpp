#include "dlearn/encoding.hpp"

#include <cmath>

namespace dlearn {

SimplexVertices simplex_vertices(int K) {
    if (K < 2) throw InvalidConfig("simplex encoding needs K >= 2");
    const int d = K - 1;
    Matrix vertices(K, d);
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    vertices.row(0).setConstant(a);
    const double lead = std::sqrt(static_cast<double>(K) / d);
    const double shift =
        (1.0 + std::sqrt(static_cast<double>(K))) / std::sqrt(std::pow(d, 3.0));
    for (int arm = 2; arm <= K; ++arm) {
        vertices.row(arm - 1).setConstant(-shift);
        vertices(arm - 1, arm - 2) += lead;
    }
    return SimplexVertices{K, std::move(vertices)};
}

Vector encode_row(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& u) {
    if (x.size() < 1 || u.size() < 1) throw InvalidInput("empty encoding input");
    const Eigen::Index p = x.size();
    const Eigen::Index d = u.size();
    Vector out(p * d);
    for (Eigen::Index j = 0; j < p; ++j)
        out.segment(j * d, d) = x[j] * u.transpose();
    return out;
}

Matrix encode_design(const Matrix& design, const Eigen::VectorXi& arms,
                     const SimplexVertices& simplex) {
    if (arms.size() != design.rows()) throw InvalidInput("arm label length mismatch");
    const Eigen::Index d = simplex.K - 1;
    Matrix out(design.rows(), design.cols() * d);
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        int a = arms[i];
        if (a < 1 || a > simplex.K) throw InvalidInput("arm label out of range");
        out.row(i) = encode_row(design.row(i), simplex.vertex(a)).transpose();
    }
    return out;
}

Vector vectorize(const Matrix& coef) {
    const Eigen::Index p = coef.rows();
    const Eigen::Index d = coef.cols();
    Vector out(p * d);
    for (Eigen::Index j = 0; j < p; ++j)
        out.segment(j * d, d) = coef.row(j).transpose();
    return out;
}

Matrix devectorize(const Vector& coef_vec, int p, int K) {
    const Eigen::Index d = K - 1;
    if (p < 1 || K < 2 || coef_vec.size() != static_cast<Eigen::Index>(p) * d)
        throw InvalidInput("coefficient vector length does not match p(K-1)");
    Matrix out(p, d);
    for (Eigen::Index j = 0; j < p; ++j)
        out.row(j) = coef_vec.segment(j * d, d).transpose();
    return out;
}

} // namespace dlearn
