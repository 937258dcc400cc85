#include "dlearn/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlearn/rng.hpp"

namespace dlearn {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void check_xyw(const Matrix& design, const Vector& y, const Vector& w) {
    if (design.rows() < 1 || design.cols() < 1)
        throw InvalidInput("empty design matrix");
    if (y.size() != design.rows() || w.size() != design.rows())
        throw InvalidInput("length mismatch between design, response and weights");
    if (!all_finite(design) || !all_finite(y) || !all_finite(w))
        throw InvalidInput("non-finite value in design, response or weights");
    if (w.minCoeff() < 0.0) throw InvalidInput("negative weight");
    if (w.maxCoeff() <= 0.0) throw InvalidInput("all weights are zero");
}

std::vector<bool> penalized_mask(Eigen::Index p, const PenaltyFreeSet& free_cols) {
    std::vector<bool> pen(static_cast<std::size_t>(p), true);
    for (int j : free_cols) {
        if (j < 0 || j >= p) throw InvalidInput("penalty-free column out of range");
        pen[static_cast<std::size_t>(j)] = false;
    }
    return pen;
}

} // namespace

DesignMatrix DesignMatrix::from_covariates(const Matrix& covariates) {
    if (!all_finite(covariates)) throw InvalidInput("non-finite covariate");
    Matrix design(covariates.rows(), covariates.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(covariates.cols()) = covariates;
    return DesignMatrix{std::move(design)};
}

DesignMatrix DesignMatrix::from_design(Matrix design) {
    if (design.rows() < 1 || design.cols() < 1)
        throw InvalidInput("empty design matrix");
    if (!all_finite(design)) throw InvalidInput("non-finite design entry");
    if ((design.col(0).array() != 1.0).any())
        throw InvalidInput("design column 0 must be identically 1");
    return DesignMatrix{std::move(design)};
}

FitResult fit_wls(const Matrix& design, const Vector& y, const Vector& w,
                  double ridge, const PenaltyFreeSet& free_cols) {
    check_xyw(design, y, w);
    if (ridge < 0.0) throw InvalidInput("negative ridge penalty");
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    const auto pen = penalized_mask(p, free_cols);

    Matrix a = design.transpose() * w.asDiagonal() * design;
    if (ridge > 0.0)
        for (Eigen::Index j = 0; j < p; ++j)
            if (pen[static_cast<std::size_t>(j)]) a(j, j) += ridge;
    Vector b = design.transpose() * (w.cwiseProduct(y));

    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw SingularDesign("singular weighted normal equations");
    Vector beta = lu.solve(b);

    FitResult out;
    out.coefficients = beta;
    out.lambda = 0.0;
    Vector resid = y - design * beta;
    double loss = resid.cwiseProduct(resid).dot(w) / static_cast<double>(n);
    if (ridge > 0.0) {
        double pensum = 0.0;
        for (Eigen::Index j = 0; j < p; ++j)
            if (pen[static_cast<std::size_t>(j)]) pensum += beta[j] * beta[j];
        loss += ridge * pensum / static_cast<double>(n);
    }
    out.objective = loss;
    out.converged = true;
    out.iterations = 1;
    return out;
}

double soft_threshold(double z, double t) {
    if (t < 0.0) throw InvalidInput("negative threshold");
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

namespace {

// Cyclic coordinate descent with an optional warm start; shared by fit_lasso
// and the CV path.
FitResult cd_fit(const Matrix& design, const Vector& y, const Vector& w,
                 double lambda, double tol, int max_iter,
                 const std::vector<bool>& pen, const Vector* warm) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector curvature(p); // n^-1 sum_i w_i x_ij^2
    for (Eigen::Index j = 0; j < p; ++j)
        curvature[j] = design.col(j).cwiseProduct(design.col(j)).dot(w) * inv_n;

    Vector beta = warm ? *warm : Vector::Zero(p);
    Vector resid = y - design * beta;

    int iter = 0;
    bool converged = false;
    for (; iter < max_iter; ++iter) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (curvature[j] <= 0.0) continue;
            double rho = design.col(j).cwiseProduct(w).dot(resid) * inv_n +
                         curvature[j] * beta[j];
            double updated = pen[static_cast<std::size_t>(j)]
                                 ? soft_threshold(rho, lambda) / curvature[j]
                                 : rho / curvature[j];
            double delta = updated - beta[j];
            if (delta != 0.0) {
                resid -= delta * design.col(j);
                beta[j] = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < tol) {
            converged = true;
            ++iter;
            break;
        }
    }

    FitResult out;
    out.coefficients = beta;
    out.lambda = lambda;
    double pensum = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        if (pen[static_cast<std::size_t>(j)]) pensum += std::abs(beta[j]);
    out.objective = 0.5 * inv_n * resid.cwiseProduct(resid).dot(w) + lambda * pensum;
    out.converged = converged;
    out.iterations = iter;
    return out;
}

} // namespace

FitResult fit_lasso(const Matrix& design, const Vector& y, const Vector& w,
                    double lambda, double tol, int max_iter,
                    const PenaltyFreeSet& free_cols) {
    check_xyw(design, y, w);
    if (lambda < 0.0) throw InvalidInput("negative lasso penalty");
    const auto pen = penalized_mask(design.cols(), free_cols);
    return cd_fit(design, y, w, lambda, tol, max_iter, pen, nullptr);
}

double lasso_lambda_max(const Matrix& design, const Vector& y, const Vector& w,
                        const PenaltyFreeSet& free_cols) {
    check_xyw(design, y, w);
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    const auto pen = penalized_mask(p, free_cols);

    // Residual after fitting the penalty-free columns alone.
    Matrix free_design(n, static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t k = 0; k < free_cols.size(); ++k)
        free_design.col(static_cast<Eigen::Index>(k)) = design.col(free_cols[k]);
    Vector resid = y;
    if (free_design.cols() > 0) {
        FitResult base = fit_wls(free_design, y, w, 0.0, {});
        resid = y - free_design * base.coefficients;
    }

    double lmax = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j)
        if (pen[static_cast<std::size_t>(j)])
            lmax = std::max(lmax,
                            std::abs(design.col(j).cwiseProduct(w).dot(resid) * inv_n));
    return lmax;
}

std::vector<double> make_lambda_grid(double lambda_max, int size, double ratio) {
    if (size < 1 || lambda_max < 0.0 || ratio <= 0.0 || ratio > 1.0)
        throw InvalidConfig("invalid lambda grid parameters");
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1 || lambda_max == 0.0) {
        std::fill(grid.begin(), grid.end(), lambda_max);
        return grid;
    }
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_max * ratio);
    for (int i = 0; i < size; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(log_max + (log_min - log_max) * i / (size - 1));
    return grid;
}

double select_lambda_cv(const Matrix& design, const Vector& y, const Vector& w,
                        const std::vector<double>& grid, int folds,
                        std::uint64_t seed, const PenaltyFreeSet& free_cols) {
    check_xyw(design, y, w);
    if (grid.empty()) throw InvalidConfig("empty lambda grid");
    if (folds < 2) throw InvalidConfig("folds must be at least 2");
    const Eigen::Index n = design.rows();
    if (n < folds) throw InvalidConfig("fewer rows than folds");
    const auto pen = penalized_mask(design.cols(), free_cols);

    std::vector<double> path(grid);
    std::sort(path.begin(), path.end(), std::greater<double>());

    std::vector<int> fold_of(static_cast<std::size_t>(n));
    {
        Rng rng(seed);
        auto perm = rng.permutation(static_cast<int>(n));
        for (int i = 0; i < n; ++i)
            fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
                i % folds;
    }

    std::vector<double> cv_error(path.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);

        Matrix xt(static_cast<Eigen::Index>(train.size()), design.cols());
        Vector yt(static_cast<Eigen::Index>(train.size()));
        Vector wt(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            xt.row(static_cast<Eigen::Index>(i)) = design.row(train[i]);
            yt[static_cast<Eigen::Index>(i)] = y[train[i]];
            wt[static_cast<Eigen::Index>(i)] = w[train[i]];
        }

        Vector warm = Vector::Zero(design.cols());
        for (std::size_t g = 0; g < path.size(); ++g) {
            FitResult fit = cd_fit(xt, yt, wt, path[g], 1e-7, 10000, pen, &warm);
            warm = fit.coefficients;
            double err = 0.0;
            for (Eigen::Index i : test) {
                double r = y[i] - design.row(i).dot(fit.coefficients);
                err += w[i] * r * r;
            }
            cv_error[g] += err;
        }
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < path.size(); ++g)
        if (cv_error[g] < cv_error[best]) best = g; // ties keep the larger lambda
    return path[best];
}

namespace {

Matrix softmax_rows(const Matrix& scores) {
    Matrix probs(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        double m = scores.row(i).maxCoeff();
        Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
        probs.row(i) = e / e.sum();
    }
    return probs;
}

} // namespace

Matrix raw_propensity_probabilities(const PropensityModel& model,
                                    const Matrix& design) {
    const Eigen::Index n = design.rows();
    if (model.kind == PropensityKind::KnownConstant) {
        return Matrix::Constant(n, model.K, model.constant);
    }
    Matrix scores = Matrix::Zero(n, model.K);
    scores.rightCols(model.K - 1) = design * model.parameters.transpose();
    return softmax_rows(scores);
}

Matrix clip_probabilities(Matrix probs, double clip) {
    return probs.cwiseMax(clip).cwiseMin(1.0 - clip);
}

Matrix PropensityModel::probabilities(const Matrix& design) const {
    Matrix probs = clip_probabilities(raw_propensity_probabilities(*this, design), clip);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) probs.row(i) /= probs.row(i).sum();
    return probs;
}

Vector PropensityModel::observed_probabilities(const Matrix& design,
                                               const Eigen::VectorXi& arms) const {
    if (arms.size() != design.rows()) throw InvalidInput("arm label length mismatch");
    Matrix probs = probabilities(design);
    Vector out(design.rows());
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        int a = arms[i];
        if (a < 1 || a > K) throw InvalidInput("arm label out of range");
        out[i] = probs(i, a - 1);
    }
    return out;
}

PropensityModel fit_propensity(const Matrix& design, const Eigen::VectorXi& arms,
                               int K, double clip) {
    if (K < 2) throw InvalidConfig("need at least two arms");
    if (clip <= 0.0 || clip >= 1.0 / K)
        throw InvalidConfig("clip must lie in (0, 1/K)");
    if (arms.size() != design.rows()) throw InvalidInput("arm label length mismatch");
    if (!design.allFinite()) throw InvalidInput("non-finite design entry");

    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < arms.size(); ++i) {
        int a = arms[i];
        if (a < 1 || a > K) throw InvalidInput("arm label out of range");
        ++counts[static_cast<std::size_t>(a - 1)];
    }
    for (int k = 0; k < K; ++k)
        if (counts[static_cast<std::size_t>(k)] == 0)
            throw MissingArm("arm " + std::to_string(k + 1) + " never observed");

    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();

    PropensityModel model;
    model.kind = K == 2 ? PropensityKind::Logistic : PropensityKind::Multinomial;
    model.K = K;
    model.clip = clip;
    model.converged = true;

    if (K == 2) {
        // IRLS for Pr(A = 2 | x).
        Vector target(n);
        for (Eigen::Index i = 0; i < n; ++i) target[i] = arms[i] == 2 ? 1.0 : 0.0;
        Vector beta = Vector::Zero(p);
        bool converged = false;
        for (int iter = 0; iter < 100; ++iter) {
            Vector eta = design * beta;
            Vector prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
            Vector wirls =
                (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10).matrix();
            Vector z = eta + (target - prob).cwiseQuotient(wirls);
            Eigen::FullPivLU<Matrix> lu(design.transpose() * wirls.asDiagonal() *
                                        design);
            if (!lu.isInvertible()) break;
            Vector next = lu.solve(design.transpose() * (wirls.cwiseProduct(z)));
            double delta = (next - beta).cwiseAbs().maxCoeff();
            beta = next;
            if (beta.cwiseAbs().maxCoeff() > 1e3) break; // separation
            if (delta < 1e-8) {
                converged = true;
                break;
            }
        }
        model.parameters = beta.transpose();
        model.converged = converged;
        return model;
    }

    // Multinomial softmax, full-batch gradient descent with step halving.
    Matrix theta = Matrix::Zero(K - 1, p);
    auto nll = [&](const Matrix& th) {
        Matrix scores = Matrix::Zero(n, K);
        scores.rightCols(K - 1) = design * th.transpose();
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double m = scores.row(i).maxCoeff();
            double lse = m + std::log((scores.row(i).array() - m).exp().sum());
            total += lse - scores(i, arms[i] - 1);
        }
        return total / static_cast<double>(n);
    };
    auto gradient = [&](const Matrix& th) {
        Matrix scores = Matrix::Zero(n, K);
        scores.rightCols(K - 1) = design * th.transpose();
        Matrix probs = softmax_rows(scores);
        for (Eigen::Index i = 0; i < n; ++i) probs(i, arms[i] - 1) -= 1.0;
        return Matrix((probs.rightCols(K - 1).transpose() * design) /
                      static_cast<double>(n));
    };

    double current = nll(theta);
    double step = 1.0;
    bool converged = false;
    for (int iter = 0; iter < 1000; ++iter) {
        Matrix grad = gradient(theta);
        if (grad.cwiseAbs().maxCoeff() < 1e-6) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (int halvings = 0; halvings < 40; ++halvings) {
            Matrix candidate = theta - step * grad;
            double value = nll(candidate);
            if (value < current) {
                theta = candidate;
                current = value;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (theta.cwiseAbs().maxCoeff() > 1e3) break; // separation
    }
    model.parameters = theta;
    model.converged = converged;
    return model;
}

SandwichCovariance sandwich_covariance(const Matrix& design, const Vector& sigma2) {
    if (sigma2.size() != design.rows())
        throw InvalidInput("variance vector length mismatch");
    if (!design.allFinite() || !sigma2.allFinite())
        throw InvalidInput("non-finite input");
    if (sigma2.minCoeff() <= 0.0) throw InvalidInput("variances must be positive");

    Matrix info = design.transpose() * sigma2.cwiseInverse().asDiagonal() * design;
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success)
        throw SingularDesign("information matrix is not positive definite");
    Matrix cov = llt.solve(Matrix::Identity(info.rows(), info.cols()));
    cov = 0.5 * (cov + cov.transpose()).eval();
    return SandwichCovariance{std::move(cov), design.rows()};
}

} // namespace dlearn
