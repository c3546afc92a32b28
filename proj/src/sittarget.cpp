#include "situ3d/sittarget.hpp"

#include <cmath>

namespace situ3d::sit {

int AnchorTargets::n_rot_supervised() const {
    int n = 0;
    for (const auto m : rot_mask) n += m ? 1 : 0;
    return n;
}

AnchorTargets gaussian_targets(const vox::TokenSet& tokens, const SituationVector& gt,
                               double sigma, double enlarge, RotSupervision mode) {
    if (sigma <= 0.0) throw DegenerateInput("sigma must be positive");
    if (enlarge < 1.0) throw DegenerateInput("peak enlarging factor must be at least 1");
    const int n = tokens.count();
    if (tokens.n_real() == 0) throw NoRealTokens("gaussian targets need at least one real token");

    const double sigma_eff = sigma * enlarge;
    AnchorTargets t;
    t.likelihood = Eigen::VectorXd::Zero(n);
    t.rot6d = Eigen::MatrixXd::Zero(n, 6);
    t.rot_mask.assign(static_cast<std::size_t>(n), 0);

    const geom::Rot6d gt_rot = geom::matrix_to_rot6d(gt.rot());
    double peak = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!tokens.mask[static_cast<std::size_t>(i)]) continue;
        const double dx = tokens.anchors(i, 0) - gt.pos().x();
        const double dy = tokens.anchors(i, 1) - gt.pos().y();
        const double d2 = dx * dx + dy * dy;
        t.likelihood(i) = std::exp(-d2 / (2.0 * sigma_eff * sigma_eff));
        peak = std::max(peak, t.likelihood(i));
        t.rot6d.row(i) = gt_rot.transpose();
    }
    t.likelihood /= peak;
    for (int i = 0; i < n; ++i) {
        if (!tokens.mask[static_cast<std::size_t>(i)]) {
            t.likelihood(i) = 0.0;
            continue;
        }
        const bool supervised =
            mode == RotSupervision::All || t.likelihood(i) >= 0.5;
        t.rot_mask[static_cast<std::size_t>(i)] = supervised ? 1 : 0;
    }
    return t;
}

namespace {

void check_pred_shape(Eigen::Index rows, Eigen::Index cols, const AnchorTargets& targets,
                      const std::vector<std::uint8_t>& token_mask) {
    if (cols != 7) throw ShapeMismatch("situation prediction must have 7 channels");
    if (rows != targets.likelihood.size() || rows != targets.rot6d.rows() ||
        rows != static_cast<Eigen::Index>(token_mask.size()) ||
        rows != static_cast<Eigen::Index>(targets.rot_mask.size()))
        throw ShapeMismatch("situation prediction row count does not match targets");
}

} // namespace

nn::Tensor situation_loss(nn::Graph& g, nn::Tensor pred, const AnchorTargets& targets,
                          const std::vector<std::uint8_t>& token_mask, double lambda_rot) {
    check_pred_shape(pred.rows(), pred.cols(), targets, token_mask);
    const Eigen::Index n = pred.rows();

    double n_real = 0.0;
    for (const auto m : token_mask) n_real += m ? 1.0 : 0.0;
    if (n_real == 0.0) throw NoRealTokens("situation loss needs at least one real token");

    Eigen::VectorXd bce_weights(n);
    for (Eigen::Index i = 0; i < n; ++i)
        bce_weights(i) = token_mask[static_cast<std::size_t>(i)] ? 1.0 / n_real : 0.0;
    nn::Tensor loss =
        g.bce_with_logits(g.slice_cols(pred, 0, 1), targets.likelihood, bce_weights);

    const int n_rot = targets.n_rot_supervised();
    if (n_rot > 0 && lambda_rot != 0.0) {
        Eigen::MatrixXd rot_weights = Eigen::MatrixXd::Zero(n, 6);
        for (Eigen::Index i = 0; i < n; ++i)
            if (targets.rot_mask[static_cast<std::size_t>(i)])
                rot_weights.row(i).setConstant(1.0 / (6.0 * n_rot));
        nn::Tensor rot_term = g.l1_loss(g.slice_cols(pred, 1, 6), targets.rot6d, rot_weights);
        loss = g.add(loss, g.scale(rot_term, lambda_rot));
    }
    return loss;
}

double situation_loss_value(const Eigen::MatrixXd& pred, const AnchorTargets& targets,
                            const std::vector<std::uint8_t>& token_mask, double lambda_rot) {
    nn::Graph g;
    return situation_loss(g, g.leaf(pred, false), targets, token_mask, lambda_rot).item();
}

int peak_token_index(const Eigen::MatrixXd& pred, const std::vector<std::uint8_t>& mask) {
    if (pred.rows() != static_cast<Eigen::Index>(mask.size()))
        throw ShapeMismatch("prediction rows do not match mask length");
    int best = -1;
    double best_logit = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        if (best < 0 || pred(i, 0) > best_logit) {
            best = static_cast<int>(i);
            best_logit = pred(i, 0);
        }
    }
    if (best < 0) throw NoRealTokens("no real token to decode a situation from");
    return best;
}

SituationVector decode_situation(const Eigen::MatrixXd& pred,
                                 const Eigen::Matrix<double, Eigen::Dynamic, 3>& anchors,
                                 const std::vector<std::uint8_t>& mask) {
    if (pred.cols() != 7) throw ShapeMismatch("situation prediction must have 7 channels");
    if (pred.rows() != anchors.rows())
        throw ShapeMismatch("prediction rows do not match anchor count");
    const int best = peak_token_index(pred, mask);
    const geom::Rot6d v = pred.row(best).segment<6>(1).transpose();
    const geom::Mat3 rot_raw = geom::rot6d_to_matrix(v);
    // Predicted rotations are generally not exactly yaw-only; keep the
    // horizontal component of the heading, which is what evaluation measures.
    const double yaw = geom::yaw_of(rot_raw);
    return SituationVector::from_yaw(anchors.row(best).transpose(), yaw);
}

} // namespace situ3d::sit
