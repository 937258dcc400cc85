#pragma once

#include <cstdint>
#include <vector>

#include "dlearn/dataset.hpp"
#include "dlearn/linmod.hpp"
#include "dlearn/rng.hpp"

namespace dlearn {

struct TreeParams {
    int max_depth = -1; // -1 = unlimited
    int min_leaf = 5;
    int mtry = -1; // -1 = all features
};

// Axis-aligned CART regression tree minimizing squared error.
class RegressionTree {
  public:
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    void fit(const Matrix& features, const Vector& target,
             const std::vector<int>& rows, const TreeParams& params, Rng& rng);
    double predict(const Eigen::RowVectorXd& row) const;
    const std::vector<Node>& nodes() const { return nodes_; }

  private:
    std::vector<Node> nodes_;
};

struct ForestParams {
    int n_trees = 300;
    int min_leaf = 5;
    int max_depth = -1;
    int mtry = -1; // -1 = ceil(d / 3)
};

// Bagged regression trees: bootstrap rows, per-split feature subsampling.
struct RandomForest {
    ForestParams params;
    std::vector<RegressionTree> trees;

    void fit(const Matrix& features, const Vector& target, std::uint64_t seed);
    double predict(const Eigen::RowVectorXd& row) const;
};

struct BoostParams {
    int rounds = 200;
    int depth = 3;
    int min_leaf = 5;
    double shrinkage = 0.1;
    double subsample = 0.8;
    double holdout = 0.2; // early-stopping split; 0 disables
    int patience = 10;
};

// Stagewise squared-error boosting with shrinkage and row subsampling.
struct GradientBoosting {
    BoostParams params;
    double base_value = 0.0;
    std::vector<RegressionTree> trees;

    void fit(const Matrix& features, const Vector& target, std::uint64_t seed);
    double predict(const Eigen::RowVectorXd& row) const;
};

enum class VarFamily { LinearL1, RandomForest, GradientBoosting };

std::string to_string(VarFamily family);
VarFamily var_family_from_string(const std::string& name);

struct VarHyperparams {
    ForestParams forest;
    BoostParams boost;
    // Tuning grids for the forest (Cartesian product).
    std::vector<int> forest_tree_grid{100, 300};
    std::vector<int> forest_leaf_grid{5, 20};
};

// Fitted predictor of the conditional residual variance, clamped below by a
// positivity floor.
struct VarianceModel {
    VarFamily family = VarFamily::LinearL1;
    double floor = 1e-6;

    FitResult linear;             // LinearL1; fit on square-expanded features
    RandomForest forest;          // RandomForest
    GradientBoosting boosting;    // GradientBoosting

    double predict(const Eigen::RowVectorXd& features_row) const;
    Vector predict_all(const Matrix& features) const;
};

// Per-row features for variance modeling: binary -> [X | A], multi-arm ->
// [X | u_A'].
Matrix build_variance_features(const Dataset& data);

// Appends elementwise squares of the non-intercept columns (linear family).
Matrix expand_squares(const Matrix& features);

double default_variance_floor(const Vector& sq_resid);

VarianceModel fit_residual_model(const Matrix& features, const Vector& sq_resid,
                                 VarFamily family, const VarHyperparams& hp,
                                 double floor, std::uint64_t seed);

struct FamilySelection {
    VarFamily family = VarFamily::LinearL1;
    VarHyperparams tuned;
};

// Tunes each candidate's hyperparameters once globally, then picks the family
// with the lowest fold-averaged test MSE. Ties prefer linear over forest over
// boosting.
FamilySelection select_family_cv(const Matrix& features, const Vector& sq_resid,
                                 const std::vector<VarFamily>& candidates,
                                 int folds, std::uint64_t seed,
                                 const VarHyperparams& hp = {});

} // namespace dlearn
