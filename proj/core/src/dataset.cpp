#include "dlearn/dataset.hpp"

namespace dlearn {

namespace {

void check_common(const DesignMatrix& X, const Eigen::VectorXi& A, const Vector& R,
                  const Vector& pi) {
    const Eigen::Index n = X.rows();
    if (A.size() != n || R.size() != n || pi.size() != n)
        throw InvalidInput("dataset column lengths disagree");
    if (!R.allFinite() || !pi.allFinite())
        throw InvalidInput("non-finite outcome or propensity");
    if (pi.minCoeff() <= 0.0 || pi.maxCoeff() >= 1.0)
        throw InvalidInput("propensities must lie in (0, 1)");
}

} // namespace

Dataset Dataset::binary(DesignMatrix X, Eigen::VectorXi A, Vector R, Vector pi) {
    check_common(X, A, R, pi);
    for (Eigen::Index i = 0; i < A.size(); ++i)
        if (A[i] != -1 && A[i] != 1)
            throw InvalidInput("binary arm labels must be -1 or +1");
    return Dataset{TreatmentMode::Binary, 2,         std::move(X),
                   std::move(A),          std::move(R), std::move(pi)};
}

Dataset Dataset::multi_arm(DesignMatrix X, Eigen::VectorXi A, Vector R, Vector pi,
                           int K) {
    if (K < 2) throw InvalidConfig("multi-arm dataset needs K >= 2");
    check_common(X, A, R, pi);
    for (Eigen::Index i = 0; i < A.size(); ++i)
        if (A[i] < 1 || A[i] > K)
            throw InvalidInput("arm label outside 1..K");
    return Dataset{TreatmentMode::MultiArm, K,          std::move(X),
                   std::move(A),            std::move(R), std::move(pi)};
}

Eigen::VectorXi Dataset::arm_labels() const {
    if (mode == TreatmentMode::MultiArm) return A;
    Eigen::VectorXi labels(A.size());
    for (Eigen::Index i = 0; i < A.size(); ++i) labels[i] = A[i] == 1 ? 1 : 2;
    return labels;
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    Matrix x(m, X.cols());
    Eigen::VectorXi a(m);
    Vector r(m), p(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        x.row(i) = X.values.row(rows[static_cast<std::size_t>(i)]);
        a[i] = A[rows[static_cast<std::size_t>(i)]];
        r[i] = R[rows[static_cast<std::size_t>(i)]];
        p[i] = pi[rows[static_cast<std::size_t>(i)]];
    }
    Dataset out = *this;
    out.X = DesignMatrix{std::move(x)};
    out.A = std::move(a);
    out.R = std::move(r);
    out.pi = std::move(p);
    return out;
}

} // namespace dlearn
