#pragma once

#include <Eigen/Dense>

#include "dlearn/errors.hpp"
#include "dlearn/linmod.hpp"

namespace dlearn {

// K unit vectors in R^{K-1} forming a regular simplex: pairwise inner
// products -1/(K-1), vertex sum zero.
struct SimplexVertices {
    int K = 0;
    Matrix vertices; // K x (K-1), one vertex per row

    Eigen::RowVectorXd vertex(int arm) const { return vertices.row(arm - 1); }
};

SimplexVertices simplex_vertices(int K);

// Kronecker feature x_star = x (x) u, ordered in covariate-major blocks so
// that x_star' Vec(B') = u' B' x.
Vector encode_row(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& u);

// Row-wise encoding of a design against each subject's own arm vertex.
Matrix encode_design(const Matrix& design, const Eigen::VectorXi& arms,
                     const SimplexVertices& simplex);

// Vec(B') with the column-stacking convention.
Vector vectorize(const Matrix& coef);
// Inverse reshape: length p(K-1) vector back to the p x (K-1) matrix.
Matrix devectorize(const Vector& coef_vec, int p, int K);

} // namespace dlearn
