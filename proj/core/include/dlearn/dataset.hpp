#pragma once

#include <Eigen/Dense>

#include "dlearn/errors.hpp"
#include "dlearn/linmod.hpp"

namespace dlearn {

enum class TreatmentMode { Binary, MultiArm };

// Observed triplets (X, A, R) plus per-row propensities. Binary mode stores
// arms as {-1, +1}; multi-arm mode as labels 1..K.
struct Dataset {
    TreatmentMode mode = TreatmentMode::Binary;
    int K = 2;
    DesignMatrix X;
    Eigen::VectorXi A;
    Vector R;
    Vector pi;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    static Dataset binary(DesignMatrix X, Eigen::VectorXi A, Vector R, Vector pi);
    static Dataset multi_arm(DesignMatrix X, Eigen::VectorXi A, Vector R, Vector pi,
                             int K);

    // Multi-arm view of binary data with {+1 -> arm 1, -1 -> arm 2}.
    Eigen::VectorXi arm_labels() const;

    Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

} // namespace dlearn
