#pragma once

#include <optional>
#include <string>
#include <vector>

#include "situ3d/geometry.hpp"
#include "situ3d/nn/modules.hpp"
#include "situ3d/sittarget.hpp"
#include "situ3d/text.hpp"
#include "situ3d/voxtok.hpp"

namespace situ3d::net {

using geom::SituationVector;

// Pipeline wiring variants: the full model, the pilot-study degradations,
// the two ground-truth oracles, and the direct-regression baseline.
enum class Mode {
    Full,
    NoSituationText,
    CorruptedSupervision,
    GtAsInputToken,
    GtAsIntermediate,
    DirectRegression,
};

Mode parse_mode(const std::string& name);
const std::string& mode_name(Mode mode);
const std::vector<Mode>& all_modes();

struct ModelConfig {
    int vocab_size = 0;
    int feature_dim = 0; // visual token feature width C_v
    int n_answers = 0;
    int text_len = 100;
    int dim = 64;
    int pe_hidden = 128;
    int heads = 4;
    int fusion_layers = 2;
    int reencode_blocks = 2;
    int decoder_layers = 2;
    int ffn_mult = 2;
    std::uint64_t init_seed = 7;
};

// Token set plus the per-scene normalization used by the positional MLPs
// (coordinates in [-1,1] per axis of the scene bounding box).
struct SceneInput {
    vox::TokenSet tokens;
    Eigen::MatrixXd norm_anchors; // N_v x 3
    geom::Vec3 center = geom::Vec3::Zero();
    geom::Vec3 half = geom::Vec3::Ones();
    double scale = 1.0; // half-diagonal, used for situated coordinates

    static SceneInput from_tokens(vox::TokenSet tokens);
};

struct EpisodeInput {
    int scene_index = 0;
    TextTokens situation;
    TextTokens question;
    int answer_index = -1; // -1 when outside the answer vocabulary
    std::string answer_text;
    std::string question_type;
    SituationVector gt;
};

struct ForwardResult {
    nn::Tensor situation_pred; // N_v x 7, invalid in direct-regression mode
    nn::Tensor regression_pred; // 1 x 9, valid in direct-regression mode only
    nn::Tensor answer_logits;   // 1 x n_answers
    SituationVector head_estimate;     // decoded from the model output
    SituationVector reported_estimate; // ground truth in the oracle modes
    SituationVector pe_pose;           // pose the situational PE actually used
    bool decode_failed = false;
    Eigen::VectorXd activation_before; // per-token L2 norms, for visualization
    Eigen::VectorXd activation_after;
};

class SituNet {
public:
    explicit SituNet(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

    /// Shared text tokenizer: embedding plus learned position embedding.
    nn::Tensor embed_text(nn::Graph& g, const TextTokens& text) const;

    /// Project token features and add the learned 3D positional embedding.
    nn::Tensor embed_visual(nn::Graph& g, const SceneInput& scene) const;

    nn::Tensor fuse(nn::Graph& g, nn::Tensor visual, const std::vector<std::uint8_t>& vis_mask,
                    nn::Tensor situation, const std::vector<std::uint8_t>& situ_mask) const;

    nn::Tensor situation_head(nn::Graph& g, nn::Tensor fused) const; // N_v x 7

    /// Positional embedding of the anchors realigned into the situated frame.
    nn::Tensor situational_pe(nn::Graph& g, const SceneInput& scene,
                              const SituationVector& s) const;

    nn::Tensor reencode(nn::Graph& g, nn::Tensor fused, nn::Tensor situ_pe,
                        const std::vector<std::uint8_t>& vis_mask, nn::Tensor situation,
                        const std::vector<std::uint8_t>& situ_mask) const;

    nn::Tensor answer(nn::Graph& g, nn::Tensor visual, const std::vector<std::uint8_t>& vis_mask,
                      nn::Tensor situation, const std::vector<std::uint8_t>& situ_mask,
                      nn::Tensor question, const TextTokens& question_tokens) const;

    nn::Tensor direct_regression(nn::Graph& g, nn::Tensor fused,
                                 const std::vector<std::uint8_t>& vis_mask) const; // 1 x 9

    SituationVector decode_regression(const Eigen::MatrixXd& pred,
                                      const SceneInput& scene) const;

    /// Normalized pose encoding [(pos-center)/half, 6D rotation], 1 x 9.
    Eigen::MatrixXd encode_pose(const SituationVector& s, const SceneInput& scene) const;

    // Full pipeline for one episode. `pe_pose` overrides the pose fed to the
    // situational PE (teacher forcing, oracle modes); when null the decoded
    // estimate is used. The decoded pose enters the PE as a constant: no
    // gradient flows through the decode.
    ForwardResult forward(nn::Graph& g, const SceneInput& scene, const EpisodeInput& episode,
                          Mode mode, const SituationVector* pe_pose = nullptr,
                          bool record_activations = false) const;

private:
    ModelConfig config_;
    nn::ParameterSet params_;

    nn::Param* tok_emb_ = nullptr;
    nn::Param* pos_emb_ = nullptr;
    nn::Linear vis_proj_;
    nn::Mlp pe_raw_;
    nn::Mlp pe_situ_;
    std::vector<nn::TransformerBlock> fusion_;
    nn::Mlp sit_head_;
    nn::Mlp pose_token_mlp_;
    std::vector<nn::TransformerBlock> reencode_;
    std::vector<nn::TransformerBlock> decoder_;
    nn::LayerNorm ans_norm_;
    nn::Linear ans_head_;
    nn::Mlp regress_head_;
};

/// run_mode: forward one episode under a mode and return the answer
/// prediction together with the reported situation estimate.
struct ModePrediction {
    std::string answer;
    int answer_index = -1;
    SituationVector situation;
    Eigen::VectorXd answer_logits;
};

ModePrediction run_mode(const SituNet& model, const SceneInput& scene,
                        const EpisodeInput& episode, Mode mode,
                        const std::vector<std::string>& answer_vocab);

} // namespace situ3d::net
