#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dlearn/errors.hpp"

namespace dlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense design with a leading intercept column of ones.
struct DesignMatrix {
    Matrix values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    // Prepends the intercept column to a raw covariate matrix.
    static DesignMatrix from_covariates(const Matrix& covariates);
    // Validates an already-assembled design (finite, column 0 all ones).
    static DesignMatrix from_design(Matrix design);
};

struct FitResult {
    Vector coefficients;
    double lambda = 0.0;      // 0 for unpenalized fits
    double objective = 0.0;   // attained value of the declared loss
    bool converged = true;
    int iterations = 0;
};

// Columns excluded from the L1/ridge penalty. Defaults to the intercept.
using PenaltyFreeSet = std::vector<int>;

// Solves (X'WX + ridge*D) beta = X'Wy with D the identity except zero on the
// penalty-free columns. Throws SingularDesign when ridge = 0 and the system
// is rank deficient, InvalidInput on non-finite data.
FitResult fit_wls(const Matrix& design, const Vector& y, const Vector& w,
                  double ridge = 0.0, const PenaltyFreeSet& free_cols = {0});

double soft_threshold(double z, double t);

// Minimizes (2n)^-1 sum_i w_i (y_i - x_i'beta)^2 + lambda * sum_penalized |beta_j|
// by cyclic coordinate descent. Penalty-free columns are updated by exact
// minimization. Non-convergence within max_iter reports converged = false.
FitResult fit_lasso(const Matrix& design, const Vector& y, const Vector& w,
                    double lambda, double tol = 1e-7, int max_iter = 10000,
                    const PenaltyFreeSet& free_cols = {0});

// Smallest lambda that shrinks all penalized slopes to zero.
double lasso_lambda_max(const Matrix& design, const Vector& y, const Vector& w,
                        const PenaltyFreeSet& free_cols = {0});

// Log-spaced grid from lambda_max down to ratio*lambda_max, descending.
std::vector<double> make_lambda_grid(double lambda_max, int size = 50,
                                     double ratio = 1e-3);

// K-fold CV over a descending lambda grid; ties resolve toward the larger
// lambda. Fold assignment is deterministic given the seed.
double select_lambda_cv(const Matrix& design, const Vector& y, const Vector& w,
                        const std::vector<double>& grid, int folds,
                        std::uint64_t seed,
                        const PenaltyFreeSet& free_cols = {0});

enum class PropensityKind { KnownConstant, Logistic, Multinomial };

struct PropensityModel {
    PropensityKind kind = PropensityKind::KnownConstant;
    // Logistic: 1 x p (log-odds of arm 2 vs arm 1).
    // Multinomial: (K-1) x p (arms 2..K against arm 1).
    Matrix parameters;
    int K = 2;
    double clip = 0.01;
    bool converged = true;
    double constant = 0.5; // KnownConstant only

    // n x K matrix of clipped, renormalized probabilities.
    Matrix probabilities(const Matrix& design) const;
    // Probability of the observed arm for each row; arms labeled 1..K.
    Vector observed_probabilities(const Matrix& design,
                                  const Eigen::VectorXi& arms) const;
};

// Softmax probabilities without clipping; rows of `design`, K columns.
Matrix raw_propensity_probabilities(const PropensityModel& model,
                                    const Matrix& design);
// Clip each entry to [clip, 1 - clip], no renormalization.
Matrix clip_probabilities(Matrix probs, double clip);

// Logistic regression (K = 2, IRLS) or multinomial softmax (K > 2, gradient
// descent with backtracking). Arms are labeled 1..K and must all appear.
PropensityModel fit_propensity(const Matrix& design, const Eigen::VectorXi& arms,
                               int K, double clip = 0.01);

struct SandwichCovariance {
    Matrix matrix; // covariance of the fitted coefficients
    Eigen::Index n = 0;
};

// [sum_i x_i x_i' / sigma2_i]^-1, the plug-in covariance of the reweighted
// least-squares estimator.
SandwichCovariance sandwich_covariance(const Matrix& design,
                                       const Vector& sigma2);

} // namespace dlearn
