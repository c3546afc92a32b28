#pragma once

#include <Eigen/Core>
#include <vector>

#include "situ3d/geometry.hpp"
#include "situ3d/nn/graph.hpp"
#include "situ3d/voxtok.hpp"

namespace situ3d::sit {

using geom::SituationVector;

enum class RotSupervision {
    NearPeak, // supervise rotation where the soft likelihood is at least 0.5
    All,      // supervise rotation at every real token
};

// Per-anchor training signal for the situation head: a soft position
// likelihood and the ground-truth rotation in 6D form.
struct AnchorTargets {
    Eigen::VectorXd likelihood;       // in [0, 1]; masked padding rows are 0
    Eigen::MatrixXd rot6d;            // N x 6
    std::vector<std::uint8_t> rot_mask;

    int n_rot_supervised() const;
};

// Gaussian soft labels around the ground-truth position, distances measured
// in the horizontal plane. The peak-enlarging factor widens the kernel
// (effective sigma = enlarge * sigma); labels are renormalized so the best
// real anchor scores exactly 1.
AnchorTargets gaussian_targets(const vox::TokenSet& tokens, const SituationVector& gt,
                               double sigma, double enlarge,
                               RotSupervision mode = RotSupervision::NearPeak);

// Soft-label BCE on the likelihood channel (mean over real tokens) plus
// lambda_rot * L1 on the rotation channels (mean over supervised tokens,
// mean over channels). pred is N x 7: [likelihood logit, 6D rotation].
nn::Tensor situation_loss(nn::Graph& g, nn::Tensor pred, const AnchorTargets& targets,
                          const std::vector<std::uint8_t>& token_mask, double lambda_rot);

/// Plain-value evaluation of the same loss, for oracle tests.
double situation_loss_value(const Eigen::MatrixXd& pred, const AnchorTargets& targets,
                            const std::vector<std::uint8_t>& token_mask, double lambda_rot);

// Pose of the peak-likelihood token: its anchor as the position (z included)
// and its decoded 6D channels as the rotation. Ties go to the lowest index.
SituationVector decode_situation(const Eigen::MatrixXd& pred,
                                 const Eigen::Matrix<double, Eigen::Dynamic, 3>& anchors,
                                 const std::vector<std::uint8_t>& mask);

/// Index of the peak-likelihood real token (decode_situation's argmax).
int peak_token_index(const Eigen::MatrixXd& pred, const std::vector<std::uint8_t>& mask);

} // namespace situ3d::sit
