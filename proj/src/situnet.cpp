#include "situ3d/situnet.hpp"

#include <algorithm>
#include <cmath>

namespace situ3d::net {

namespace {
const std::vector<std::pair<Mode, std::string>>& mode_table() {
    static const std::vector<std::pair<Mode, std::string>> table = {
        {Mode::Full, "full"},
        {Mode::NoSituationText, "no-situation-text"},
        {Mode::CorruptedSupervision, "corrupted-supervision"},
        {Mode::GtAsInputToken, "gt-as-input-token"},
        {Mode::GtAsIntermediate, "gt-as-intermediate"},
        {Mode::DirectRegression, "direct-regression"},
    };
    return table;
}
} // namespace

Mode parse_mode(const std::string& name) {
    for (const auto& [mode, mode_str] : mode_table())
        if (mode_str == name) return mode;
    throw UnknownMode("unknown mode: '" + name + "'");
}

const std::string& mode_name(Mode mode) {
    for (const auto& [m, mode_str] : mode_table())
        if (m == mode) return mode_str;
    throw UnknownMode("unmapped mode value");
}

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes = [] {
        std::vector<Mode> out;
        for (const auto& [m, name] : mode_table()) out.push_back(m);
        return out;
    }();
    return modes;
}

SceneInput SceneInput::from_tokens(vox::TokenSet tokens) {
    SceneInput in;
    in.center = (tokens.scene_min + tokens.scene_max) / 2.0;
    in.half = ((tokens.scene_max - tokens.scene_min) / 2.0).cwiseMax(0.1);
    in.scale = in.half.norm();
    in.norm_anchors.resize(tokens.anchors.rows(), 3);
    for (Eigen::Index i = 0; i < tokens.anchors.rows(); ++i)
        in.norm_anchors.row(i) =
            ((tokens.anchors.row(i).transpose() - in.center).array() / in.half.array())
                .transpose();
    in.tokens = std::move(tokens);
    return in;
}

SituNet::SituNet(const ModelConfig& config) : config_(config) {
    if (config.vocab_size < 2 || config.feature_dim < 1 || config.n_answers < 1 ||
        config.dim < config.heads || config.text_len < 1)
        throw ConfigError("invalid model configuration");
    Rng rng(config.init_seed);
    const Eigen::Index d = config.dim;

    tok_emb_ = &params_.create_fan_in("text.tok_emb", config.vocab_size, d, rng);
    pos_emb_ = &params_.create_fan_in("text.pos_emb", config.text_len + 1, d, rng);
    vis_proj_ = nn::Linear(params_, "vis.proj", config.feature_dim, d, rng);
    pe_raw_ = nn::Mlp(params_, "vis.pe", 3, config.pe_hidden, d, rng);
    pe_situ_ = nn::Mlp(params_, "situ.pe", 3, config.pe_hidden, d, rng);
    for (int i = 0; i < config.fusion_layers; ++i)
        fusion_.emplace_back(params_, "fusion." + std::to_string(i), d, config.heads,
                             d * config.ffn_mult, /*with_cross=*/true, rng);
    sit_head_ = nn::Mlp(params_, "sit.head", d, d, 7, rng);
    pose_token_mlp_ = nn::Mlp(params_, "pose.token", 9, d, d, rng);
    for (int i = 0; i < config.reencode_blocks; ++i)
        reencode_.emplace_back(params_, "reencode." + std::to_string(i), d, config.heads,
                               d * config.ffn_mult, /*with_cross=*/true, rng);
    for (int i = 0; i < config.decoder_layers; ++i)
        decoder_.emplace_back(params_, "decoder." + std::to_string(i), d, config.heads,
                              d * config.ffn_mult, /*with_cross=*/true, rng);
    ans_norm_ = nn::LayerNorm(params_, "answer.norm", d);
    ans_head_ = nn::Linear(params_, "answer.head", d, config.n_answers, rng);
    regress_head_ = nn::Mlp(params_, "regress.head", d, d, 9, rng);
}

nn::Tensor SituNet::embed_text(nn::Graph& g, const TextTokens& text) const {
    if (text.length() > config_.text_len)
        throw LengthMismatch("text exceeds the configured padding length");
    std::vector<int> ids(text.ids);
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    nn::Tensor emb = g.add(g.gather_rows(g.param(*tok_emb_), ids),
                           g.gather_rows(g.param(*pos_emb_), positions));
    return g.mask_rows(emb, text.mask);
}

nn::Tensor SituNet::embed_visual(nn::Graph& g, const SceneInput& scene) const {
    nn::Tensor feats = vis_proj_.forward(g, g.constant(scene.tokens.features));
    nn::Tensor pe = pe_raw_.forward(g, g.constant(scene.norm_anchors));
    return g.mask_rows(g.add(feats, pe), scene.tokens.mask);
}

nn::Tensor SituNet::fuse(nn::Graph& g, nn::Tensor visual,
                         const std::vector<std::uint8_t>& vis_mask, nn::Tensor situation,
                         const std::vector<std::uint8_t>& situ_mask) const {
    nn::Tensor x = visual;
    for (const auto& block : fusion_) x = block.forward(g, x, vis_mask, situation, situ_mask);
    return x;
}

nn::Tensor SituNet::situation_head(nn::Graph& g, nn::Tensor fused) const {
    return sit_head_.forward(g, fused);
}

nn::Tensor SituNet::situational_pe(nn::Graph& g, const SceneInput& scene,
                                   const SituationVector& s) const {
    const geom::Points realigned = geom::realign_frame(scene.tokens.anchors, s);
    return pe_situ_.forward(g, g.constant(realigned / scene.scale));
}

nn::Tensor SituNet::reencode(nn::Graph& g, nn::Tensor fused, nn::Tensor situ_pe,
                             const std::vector<std::uint8_t>& vis_mask, nn::Tensor situation,
                             const std::vector<std::uint8_t>& situ_mask) const {
    nn::Tensor x = g.mask_rows(g.add(fused, situ_pe), vis_mask);
    for (const auto& block : reencode_) x = block.forward(g, x, vis_mask, situation, situ_mask);
    return x;
}

nn::Tensor SituNet::answer(nn::Graph& g, nn::Tensor visual,
                           const std::vector<std::uint8_t>& vis_mask, nn::Tensor situation,
                           const std::vector<std::uint8_t>& situ_mask, nn::Tensor question,
                           const TextTokens& question_tokens) const {
    if (question_tokens.empty()) throw EmptyQuestion("question has no tokens");
    // The decoder attends to the re-encoded visual tokens and the situation
    // text jointly.
    nn::Tensor memory = g.concat_rows(visual, situation);
    std::vector<std::uint8_t> memory_mask(vis_mask);
    memory_mask.insert(memory_mask.end(), situ_mask.begin(), situ_mask.end());
    bool any = false;
    for (const auto m : memory_mask) any = any || (m != 0);
    if (!any) throw NoRealTokens("answer decoder has an empty memory");

    nn::Tensor x = question;
    for (const auto& block : decoder_)
        x = block.forward(g, x, question_tokens.mask, memory, memory_mask);
    nn::Tensor pooled = nn::masked_mean_rows(g, x, question_tokens.mask);
    return ans_head_.forward(g, ans_norm_.forward(g, pooled));
}

nn::Tensor SituNet::direct_regression(nn::Graph& g, nn::Tensor fused,
                                      const std::vector<std::uint8_t>& vis_mask) const {
    return regress_head_.forward(g, nn::masked_mean_rows(g, fused, vis_mask));
}

Eigen::MatrixXd SituNet::encode_pose(const SituationVector& s, const SceneInput& scene) const {
    Eigen::MatrixXd out(1, 9);
    out.block<1, 3>(0, 0) =
        ((s.pos() - scene.center).array() / scene.half.array()).transpose();
    out.block<1, 6>(0, 3) = geom::matrix_to_rot6d(s.rot()).transpose();
    return out;
}

SituationVector SituNet::decode_regression(const Eigen::MatrixXd& pred,
                                           const SceneInput& scene) const {
    if (pred.rows() != 1 || pred.cols() != 9)
        throw ShapeMismatch("regression prediction must be 1 x 9");
    const geom::Vec3 pos =
        scene.center + (pred.block<1, 3>(0, 0).transpose().array() * scene.half.array()).matrix();
    const geom::Rot6d v = pred.block<1, 6>(0, 3).transpose();
    const double yaw = geom::yaw_of(geom::rot6d_to_matrix(v));
    return SituationVector::from_yaw(pos, yaw);
}

ForwardResult SituNet::forward(nn::Graph& g, const SceneInput& scene,
                               const EpisodeInput& episode, Mode mode,
                               const SituationVector* pe_pose, bool record_activations) const {
    ForwardResult out;
    const TextTokens& situ_text = episode.situation;
    if (mode == Mode::NoSituationText && situ_text.n_real() != 0)
        throw ConfigError("no-situation-text episodes must carry empty situation tokens");

    nn::Tensor situ_emb = embed_text(g, situ_text);
    std::vector<std::uint8_t> situ_mask = situ_text.mask;
    if (mode == Mode::GtAsInputToken) {
        nn::Tensor pose_tok =
            pose_token_mlp_.forward(g, g.constant(encode_pose(episode.gt, scene)));
        situ_emb = g.concat_rows(situ_emb, pose_tok);
        situ_mask.push_back(1);
    }

    nn::Tensor visual = embed_visual(g, scene);
    const std::vector<std::uint8_t>& vis_mask = scene.tokens.mask;
    nn::Tensor fused = fuse(g, visual, vis_mask, situ_emb, situ_mask);

    if (record_activations) {
        out.activation_before = fused.value().rowwise().norm();
    }

    // Situation estimate. The decode is not differentiable; downstream use
    // treats the pose as a constant.
    if (mode == Mode::DirectRegression) {
        out.regression_pred = direct_regression(g, fused, vis_mask);
        try {
            out.head_estimate = decode_regression(out.regression_pred.value(), scene);
        } catch (const Error&) {
            out.head_estimate = SituationVector();
            out.decode_failed = true;
        }
    } else {
        out.situation_pred = situation_head(g, fused);
        try {
            out.head_estimate = sit::decode_situation(out.situation_pred.value(),
                                                      scene.tokens.anchors, vis_mask);
        } catch (const Error&) {
            out.head_estimate = SituationVector();
            out.decode_failed = true;
        }
    }

    const bool oracle = mode == Mode::GtAsInputToken || mode == Mode::GtAsIntermediate;
    out.reported_estimate = oracle ? episode.gt : out.head_estimate;
    out.pe_pose = pe_pose != nullptr
                      ? *pe_pose
                      : (mode == Mode::GtAsIntermediate ? episode.gt : out.head_estimate);

    nn::Tensor situ_pe = situational_pe(g, scene, out.pe_pose);
    nn::Tensor reencoded = reencode(g, fused, situ_pe, vis_mask, situ_emb, situ_mask);
    if (record_activations) {
        out.activation_after = reencoded.value().rowwise().norm();
    }

    nn::Tensor question_emb = embed_text(g, episode.question);
    out.answer_logits =
        answer(g, reencoded, vis_mask, situ_emb, situ_mask, question_emb, episode.question);
    return out;
}

ModePrediction run_mode(const SituNet& model, const SceneInput& scene,
                        const EpisodeInput& episode, Mode mode,
                        const std::vector<std::string>& answer_vocab) {
    EpisodeInput ep = episode;
    if (mode == Mode::NoSituationText)
        ep.situation = TextTokens::empty_tokens(ep.situation.length());
    nn::Graph g;
    const ForwardResult result = model.forward(g, scene, ep, mode);

    ModePrediction pred;
    pred.situation = result.reported_estimate;
    pred.answer_logits = result.answer_logits.value().row(0).transpose();
    int best = 0;
    for (Eigen::Index i = 1; i < pred.answer_logits.size(); ++i)
        if (pred.answer_logits(i) > pred.answer_logits(best)) best = static_cast<int>(i);
    pred.answer_index = best;
    pred.answer = answer_vocab.at(static_cast<std::size_t>(best));
    return pred;
}

} // namespace situ3d::net
