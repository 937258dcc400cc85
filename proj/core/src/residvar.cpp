#include "dlearn/residvar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <limits>

#include "dlearn/encoding.hpp"
#include "dlearn/learners.hpp"

namespace dlearn {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0; // SL^2/nL + SR^2/nR, to maximize
};

// Partial Fisher-Yates draw of `count` distinct feature indices.
std::vector<int> sample_features(int d, int count, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(d));
    std::iota(idx.begin(), idx.end(), 0);
    if (count >= d) return idx;
    for (int i = 0; i < count; ++i) {
        int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

} // namespace

void RegressionTree::fit(const Matrix& features, const Vector& target,
                         const std::vector<int>& rows, const TreeParams& params,
                         Rng& rng) {
    nodes_.clear();
    const int d = static_cast<int>(features.cols());
    const int mtry = params.mtry > 0 ? std::min(params.mtry, d) : d;

    struct Work {
        int node;
        std::vector<int> rows;
        int depth;
    };
    std::vector<Work> stack;
    nodes_.push_back(Node{});
    stack.push_back(Work{0, rows, 0});

    std::vector<std::pair<double, double>> buffer;
    while (!stack.empty()) {
        Work work = std::move(stack.back());
        stack.pop_back();
        const int m = static_cast<int>(work.rows.size());
        double sum = 0.0;
        for (int r : work.rows) sum += target[r];
        const double mean = m > 0 ? sum / m : 0.0;
        Node& node = nodes_[static_cast<std::size_t>(work.node)];
        node.value = mean;

        if (m < 2 * params.min_leaf ||
            (params.max_depth >= 0 && work.depth >= params.max_depth))
            continue;

        SplitChoice best;
        const double base_score = sum * sum / m;
        for (int f : sample_features(d, mtry, rng)) {
            buffer.clear();
            buffer.reserve(static_cast<std::size_t>(m));
            for (int r : work.rows)
                buffer.emplace_back(features(r, f), target[r]);
            std::sort(buffer.begin(), buffer.end());
            double left_sum = 0.0;
            for (int s = 1; s < m; ++s) {
                left_sum += buffer[static_cast<std::size_t>(s - 1)].second;
                if (s < params.min_leaf || m - s < params.min_leaf) continue;
                if (buffer[static_cast<std::size_t>(s - 1)].first >=
                    buffer[static_cast<std::size_t>(s)].first)
                    continue;
                double right_sum = sum - left_sum;
                double score = left_sum * left_sum / s + right_sum * right_sum / (m - s);
                if (score > best.score) {
                    best.feature = f;
                    best.threshold = 0.5 * (buffer[static_cast<std::size_t>(s - 1)].first +
                                            buffer[static_cast<std::size_t>(s)].first);
                    best.score = score;
                }
            }
        }
        if (best.feature < 0 || best.score <= base_score + 1e-12) continue;

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(static_cast<std::size_t>(m));
        right_rows.reserve(static_cast<std::size_t>(m));
        for (int r : work.rows)
            (features(r, best.feature) <= best.threshold ? left_rows : right_rows)
                .push_back(r);
        if (left_rows.empty() || right_rows.empty()) continue;

        int left_id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});
        int right_id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});
        Node& parent = nodes_[static_cast<std::size_t>(work.node)];
        parent.feature = best.feature;
        parent.threshold = best.threshold;
        parent.left = left_id;
        parent.right = right_id;
        stack.push_back(Work{right_id, std::move(right_rows), work.depth + 1});
        stack.push_back(Work{left_id, std::move(left_rows), work.depth + 1});
    }
}

double RegressionTree::predict(const Eigen::RowVectorXd& row) const {
    int id = 0;
    while (true) {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.feature < 0) return node.value;
        id = row[node.feature] <= node.threshold ? node.left : node.right;
    }
}

void RandomForest::fit(const Matrix& features, const Vector& target,
                       std::uint64_t seed) {
    const int n = static_cast<int>(features.rows());
    const int d = static_cast<int>(features.cols());
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;
    tp.mtry = params.mtry > 0 ? params.mtry : (d + 2) / 3;

    trees.assign(static_cast<std::size_t>(params.n_trees), RegressionTree{});
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            rows[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        trees[static_cast<std::size_t>(t)].fit(features, target, rows, tp, rng);
    }
}

double RandomForest::predict(const Eigen::RowVectorXd& row) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(row);
    return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
}

void GradientBoosting::fit(const Matrix& features, const Vector& target,
                           std::uint64_t seed) {
    const int n = static_cast<int>(features.rows());
    Rng rng(derive_seed(seed, 0xb005u));

    std::vector<int> train, holdout;
    if (params.holdout > 0.0 && n >= 5) {
        auto perm = rng.permutation(n);
        int n_holdout = std::max(1, static_cast<int>(params.holdout * n));
        for (int i = 0; i < n; ++i)
            (i < n_holdout ? holdout : train).push_back(perm[static_cast<std::size_t>(i)]);
    } else {
        train.resize(static_cast<std::size_t>(n));
        std::iota(train.begin(), train.end(), 0);
    }

    double sum = 0.0;
    for (int r : train) sum += target[r];
    base_value = train.empty() ? 0.0 : sum / static_cast<double>(train.size());

    Vector fitted = Vector::Constant(n, base_value);
    trees.clear();

    TreeParams tp;
    tp.max_depth = params.depth;
    tp.min_leaf = params.min_leaf;
    tp.mtry = -1;

    auto holdout_mse = [&]() {
        double err = 0.0;
        for (int r : holdout) {
            double d = target[r] - fitted[r];
            err += d * d;
        }
        return holdout.empty() ? 0.0 : err / static_cast<double>(holdout.size());
    };

    int best_round = 0;
    double best_mse = holdout_mse();
    const int n_sample =
        std::max(1, static_cast<int>(params.subsample * static_cast<double>(train.size())));

    for (int round = 0; round < params.rounds; ++round) {
        std::vector<int> sample = train;
        for (int i = 0; i < n_sample; ++i) {
            int j = i + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(sample.size() - i)));
            std::swap(sample[static_cast<std::size_t>(i)],
                      sample[static_cast<std::size_t>(j)]);
        }
        sample.resize(static_cast<std::size_t>(n_sample));

        Vector residual = target - fitted;
        RegressionTree tree;
        tree.fit(features, residual, sample, tp, rng);
        trees.push_back(tree);
        for (int r = 0; r < n; ++r)
            fitted[r] += params.shrinkage * tree.predict(features.row(r));

        if (!holdout.empty()) {
            double mse = holdout_mse();
            if (mse < best_mse - 1e-12) {
                best_mse = mse;
                best_round = round + 1;
            } else if (round + 1 - best_round >= params.patience) {
                break;
            }
        } else {
            best_round = round + 1;
        }
    }
    trees.resize(static_cast<std::size_t>(best_round));
}

double GradientBoosting::predict(const Eigen::RowVectorXd& row) const {
    double value = base_value;
    for (const auto& tree : trees) value += params.shrinkage * tree.predict(row);
    return value;
}

std::string to_string(VarFamily family) {
    switch (family) {
        case VarFamily::LinearL1: return "linear-l1";
        case VarFamily::RandomForest: return "random-forest";
        case VarFamily::GradientBoosting: return "gradient-boosting";
    }
    return "?";
}

VarFamily var_family_from_string(const std::string& name) {
    if (name == "linear-l1" || name == "linear") return VarFamily::LinearL1;
    if (name == "random-forest" || name == "forest") return VarFamily::RandomForest;
    if (name == "gradient-boosting" || name == "boosting")
        return VarFamily::GradientBoosting;
    throw InvalidConfig("unknown residual-model family: " + name);
}

Matrix build_variance_features(const Dataset& data) {
    if (data.mode == TreatmentMode::Binary) {
        Matrix out(data.n(), data.p() + 1);
        out.leftCols(data.p()) = data.X.values;
        for (Eigen::Index i = 0; i < data.n(); ++i)
            out(i, data.p()) = static_cast<double>(data.A[i]);
        return out;
    }
    SimplexVertices simplex = simplex_vertices(data.K);
    Matrix out(data.n(), data.p() + data.K - 1);
    out.leftCols(data.p()) = data.X.values;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        out.row(i).rightCols(data.K - 1) = simplex.vertex(data.A[i]);
    return out;
}

Matrix expand_squares(const Matrix& features) {
    const Eigen::Index d = features.cols();
    if (d <= 1) return features;
    Matrix out(features.rows(), 2 * d - 1);
    out.leftCols(d) = features;
    out.rightCols(d - 1) = features.rightCols(d - 1).cwiseProduct(features.rightCols(d - 1));
    return out;
}

double default_variance_floor(const Vector& sq_resid) {
    return std::max(1e-6, 1e-3 * sq_resid.mean());
}

VarianceModel fit_residual_model(const Matrix& features, const Vector& sq_resid,
                                 VarFamily family, const VarHyperparams& hp,
                                 double floor, std::uint64_t seed) {
    if (sq_resid.size() != features.rows())
        throw InvalidInput("squared-residual length mismatch");
    if (!features.allFinite() || !sq_resid.allFinite())
        throw InvalidInput("non-finite residual-model input");
    if (sq_resid.minCoeff() < 0.0) throw InvalidInput("negative squared residual");
    if (floor <= 0.0) throw InvalidInput("variance floor must be positive");

    VarianceModel model;
    model.family = family;
    model.floor = floor;
    switch (family) {
        case VarFamily::LinearL1: {
            Matrix expanded = expand_squares(features);
            Vector w = Vector::Ones(features.rows());
            Regularization reg = Regularization::lasso_cv(derive_seed(seed, 1));
            model.linear = fit_linear(expanded, sq_resid, w, reg);
            break;
        }
        case VarFamily::RandomForest:
            model.forest.params = hp.forest;
            model.forest.fit(features, sq_resid, derive_seed(seed, 2));
            break;
        case VarFamily::GradientBoosting:
            model.boosting.params = hp.boost;
            model.boosting.fit(features, sq_resid, derive_seed(seed, 3));
            break;
    }
    return model;
}

double VarianceModel::predict(const Eigen::RowVectorXd& features_row) const {
    double raw = 0.0;
    switch (family) {
        case VarFamily::LinearL1: {
            if (features_row.size() + std::max<Eigen::Index>(features_row.size() - 1, 0) !=
                linear.coefficients.size())
                throw InvalidInput("feature row dimension mismatch");
            Matrix row(1, features_row.size());
            row.row(0) = features_row;
            raw = expand_squares(row).row(0).dot(linear.coefficients);
            break;
        }
        case VarFamily::RandomForest:
            raw = forest.predict(features_row);
            break;
        case VarFamily::GradientBoosting:
            raw = boosting.predict(features_row);
            break;
    }
    if (!std::isfinite(raw)) throw InvalidInput("non-finite variance prediction");
    return std::max(raw, floor);
}

Vector VarianceModel::predict_all(const Matrix& features) const {
    Vector out(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        out[i] = predict(features.row(i));
    return out;
}

namespace {

std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    Rng rng(seed);
    auto perm = rng.permutation(static_cast<int>(n));
    for (int i = 0; i < n; ++i)
        fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % folds;
    return fold_of;
}

double cv_mse(const Matrix& features, const Vector& sq_resid, VarFamily family,
              const VarHyperparams& hp, double floor, int folds,
              const std::vector<int>& fold_of, std::uint64_t seed) {
    const Eigen::Index n = features.rows();
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        Matrix xt(static_cast<Eigen::Index>(train.size()), features.cols());
        Vector yt(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            xt.row(static_cast<Eigen::Index>(i)) = features.row(train[i]);
            yt[static_cast<Eigen::Index>(i)] = sq_resid[train[i]];
        }
        VarianceModel model = fit_residual_model(
            xt, yt, family, hp, floor, derive_seed(seed, static_cast<std::uint64_t>(f)));
        double err = 0.0;
        for (Eigen::Index i : test) {
            double d = sq_resid[i] - model.predict(features.row(i));
            err += d * d;
        }
        total += err / static_cast<double>(test.size());
    }
    return total / folds;
}

int family_rank(VarFamily family) {
    switch (family) {
        case VarFamily::LinearL1: return 0;
        case VarFamily::RandomForest: return 1;
        case VarFamily::GradientBoosting: return 2;
    }
    return 3;
}

} // namespace

FamilySelection select_family_cv(const Matrix& features, const Vector& sq_resid,
                                 const std::vector<VarFamily>& candidates,
                                 int folds, std::uint64_t seed,
                                 const VarHyperparams& hp) {
    if (candidates.empty()) throw InvalidConfig("no residual-model candidates");
    if (folds < 2) throw InvalidConfig("folds must be at least 2");
    if (features.rows() < folds) throw InvalidConfig("fewer rows than folds");

    const double floor = default_variance_floor(sq_resid);
    FamilySelection out;
    out.tuned = hp;

    // Hyperparameter tuning (forest grid), once on the full data.
    bool wants_forest = false;
    for (VarFamily f : candidates) wants_forest |= f == VarFamily::RandomForest;
    if (wants_forest &&
        (hp.forest_tree_grid.size() > 1 || hp.forest_leaf_grid.size() > 1)) {
        auto tune_folds = fold_assignment(features.rows(), folds, derive_seed(seed, 11));
        double best = std::numeric_limits<double>::infinity();
        for (int trees : hp.forest_tree_grid) {
            for (int leaf : hp.forest_leaf_grid) {
                VarHyperparams candidate = hp;
                candidate.forest.n_trees = trees;
                candidate.forest.min_leaf = leaf;
                double mse = cv_mse(features, sq_resid, VarFamily::RandomForest,
                                    candidate, floor, folds, tune_folds,
                                    derive_seed(seed, 12));
                if (mse < best) {
                    best = mse;
                    out.tuned.forest = candidate.forest;
                }
            }
        }
    }

    if (candidates.size() == 1) {
        out.family = candidates.front();
        return out;
    }

    auto compare_folds = fold_assignment(features.rows(), folds, derive_seed(seed, 21));
    double best_mse = std::numeric_limits<double>::infinity();
    int best_rank = 99;
    for (VarFamily family : candidates) {
        double mse = cv_mse(features, sq_resid, family, out.tuned, floor, folds,
                            compare_folds, derive_seed(seed, 22));
        int rank = family_rank(family);
        if (mse < best_mse || (mse == best_mse && rank < best_rank)) {
            best_mse = mse;
            best_rank = rank;
            out.family = family;
        }
    }
    return out;
}

} // namespace dlearn
