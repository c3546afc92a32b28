#include "situ3d/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace situ3d::net {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x7f4a7c15ULL;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
}
} // namespace

std::vector<std::string> build_answer_vocab(const std::vector<std::string>& train_answers) {
    std::map<std::string, int> freq;
    for (const auto& a : train_answers) freq[a] += 1;
    std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> vocab;
    vocab.reserve(ranked.size());
    for (const auto& [answer, n] : ranked) vocab.push_back(answer);
    return vocab;
}

EpisodeInput make_episode_input(const scene::Episode& ep, int scene_index,
                                const Vocabulary& vocab,
                                const std::vector<std::string>& answer_vocab, int text_len,
                                bool strict) {
    EpisodeInput in;
    in.scene_index = scene_index;
    in.situation = TextTokens::encode(vocab, ep.situation, text_len, strict);
    in.question = TextTokens::encode(vocab, ep.question, text_len, strict);
    in.answer_text = ep.answer;
    in.question_type = ep.question_type();
    in.gt = ep.gt;
    const auto it = std::find(answer_vocab.begin(), answer_vocab.end(), ep.answer);
    in.answer_index = it == answer_vocab.end()
                          ? -1
                          : static_cast<int>(it - answer_vocab.begin());
    return in;
}

RawDataset generate_raw_dataset(const DataConfig& config) {
    if (config.n_scenes < 2 || config.episodes_per_scene < 1 || config.train_frac <= 0.0 ||
        config.train_frac >= 1.0)
        throw ConfigError("invalid dataset configuration");

    RawDataset raw;
    const int n_train_scenes = std::clamp(
        static_cast<int>(std::lround(config.train_frac * config.n_scenes)), 1,
        config.n_scenes - 1);
    for (int i = 0; i < config.n_scenes; ++i) {
        const std::uint64_t scene_seed = mix_seed(config.seed, static_cast<std::uint64_t>(i));
        scene::Scene s = scene::generate_scene(config.scene_cfg, scene_seed);
        s.id = i;
        for (int j = 0; j < config.episodes_per_scene; ++j)
            raw.episodes.push_back(scene::generate_episode(
                s, mix_seed(scene_seed, static_cast<std::uint64_t>(j)), config.episode_cfg));
        raw.scenes.push_back(std::move(s));
        raw.splits.push_back(i < n_train_scenes ? "train" : "test");
    }
    return raw;
}

Dataset assemble_dataset(const RawDataset& raw, const DataConfig& config, bool strict_tokens) {
    if (raw.scenes.size() != raw.splits.size())
        throw LengthMismatch("scene/split counts differ");

    Dataset data;
    data.vocab = Vocabulary::standard();
    data.text_len = config.text_len;

    std::map<int, int> index_of_id;
    for (std::size_t i = 0; i < raw.scenes.size(); ++i) {
        const scene::Scene& s = raw.scenes[i];
        if (index_of_id.count(s.id)) throw SchemaError("duplicate scene id in dataset");
        index_of_id[s.id] = static_cast<int>(i);
        const vox::VoxelGrid grid =
            vox::voxelize(s.cloud, config.voxel_size, scene::kNumCategories);
        data.scenes.push_back(SceneInput::from_tokens(vox::sample_tokens(
            vox::bev_project(grid), config.n_tokens, static_cast<std::uint64_t>(s.id))));
        data.scene_geoms.push_back(s);
    }

    std::vector<const scene::Episode*> train_eps, test_eps;
    for (const auto& ep : raw.episodes) {
        const auto it = index_of_id.find(ep.scene_id);
        if (it == index_of_id.end())
            throw SchemaError("episode references unknown scene id " +
                              std::to_string(ep.scene_id));
        if (raw.splits[static_cast<std::size_t>(it->second)] == "train")
            train_eps.push_back(&ep);
        else
            test_eps.push_back(&ep);
    }

    std::vector<std::string> train_answers;
    train_answers.reserve(train_eps.size());
    for (const auto* ep : train_eps) train_answers.push_back(ep->answer);
    data.answer_vocab = build_answer_vocab(train_answers);

    for (const auto* ep : train_eps)
        data.train.push_back(make_episode_input(*ep, index_of_id.at(ep->scene_id), data.vocab,
                                                data.answer_vocab, config.text_len,
                                                strict_tokens));
    for (const auto* ep : test_eps)
        data.test.push_back(make_episode_input(*ep, index_of_id.at(ep->scene_id), data.vocab,
                                               data.answer_vocab, config.text_len,
                                               strict_tokens));
    data.raw_episodes = raw.episodes;
    return data;
}

Dataset build_dataset(const DataConfig& config) {
    return assemble_dataset(generate_raw_dataset(config), config, /*strict_tokens=*/true);
}

std::vector<SituationVector> corrupted_poses(const Dataset& data, std::uint64_t seed) {
    std::vector<SituationVector> poses;
    poses.reserve(data.train.size());
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        const auto& geom_scene =
            data.scene_geoms[static_cast<std::size_t>(data.train[i].scene_index)];
        Rng rng(mix_seed(seed ^ 0xc0bb1edULL, i));
        const double x = rng.uniform(0.0, geom_scene.room_w);
        const double y = rng.uniform(0.0, geom_scene.room_l);
        const double yaw = rng.uniform(-kPi, kPi);
        poses.push_back(SituationVector::from_yaw(geom::Vec3(x, y, 0.0), yaw));
    }
    return poses;
}

std::string TrainResult::to_text() const {
    std::string out = "situ3d-train-log v1\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "epoch %d situation_loss %.6f qa_loss %.6f total %.6f\n",
                      e.epoch, e.situation_loss, e.qa_loss, e.total_loss);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "decode_failures %d\n", decode_failures);
    out += buf;
    return out;
}

TrainResult train_model(SituNet& model, const Dataset& data, const TrainSettings& settings) {
    if (data.train.empty()) throw ConfigError("training split is empty");

    nn::AdamWConfig opt_cfg;
    opt_cfg.lr = settings.lr;
    opt_cfg.beta1 = settings.beta1;
    opt_cfg.beta2 = settings.beta2;
    opt_cfg.eps = settings.eps;
    opt_cfg.weight_decay = settings.weight_decay;
    nn::AdamW optimizer(opt_cfg);

    const Mode mode = settings.mode;
    const bool use_situation_loss =
        mode != Mode::NoSituationText && mode != Mode::DirectRegression;

    // Supervision targets; corrupted mode replaces the poses up front so the
    // wrong labels stay fixed across epochs.
    std::vector<SituationVector> target_poses;
    target_poses.reserve(data.train.size());
    if (mode == Mode::CorruptedSupervision) {
        target_poses = corrupted_poses(data, settings.seed);
    } else {
        for (const auto& ep : data.train) target_poses.push_back(ep.gt);
    }

    std::vector<sit::AnchorTargets> targets;
    std::vector<Eigen::MatrixXd> regression_targets;
    if (use_situation_loss) {
        targets.reserve(data.train.size());
        for (std::size_t i = 0; i < data.train.size(); ++i) {
            const SceneInput& scene =
                data.scenes[static_cast<std::size_t>(data.train[i].scene_index)];
            targets.push_back(sit::gaussian_targets(
                scene.tokens, target_poses[i], settings.sigma_scale * scene.tokens.pitch,
                settings.enlarge, settings.rot_supervision));
        }
    } else if (mode == Mode::DirectRegression) {
        regression_targets.reserve(data.train.size());
        for (std::size_t i = 0; i < data.train.size(); ++i) {
            const SceneInput& scene =
                data.scenes[static_cast<std::size_t>(data.train[i].scene_index)];
            regression_targets.push_back(model.encode_pose(target_poses[i], scene));
        }
    }

    // Empty situation text is part of the mode contract, not a per-episode
    // property, so it is rewritten once here.
    std::vector<EpisodeInput> episodes(data.train);
    if (mode == Mode::NoSituationText)
        for (auto& ep : episodes) ep.situation = TextTokens::empty_tokens(ep.situation.length());

    Rng rng(mix_seed(settings.seed, 0x7ea1ULL));
    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
        // Fisher-Yates with the run RNG keeps epochs reproducible.
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        EpochLog log;
        log.epoch = epoch;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t batch_end =
                std::min(done + static_cast<std::size_t>(settings.batch_size), order.size());
            const bool teacher = rng.bernoulli(settings.teacher_prob);
            model.params().zero_grads();
            for (std::size_t b = done; b < batch_end; ++b) {
                const std::size_t idx = order[b];
                const EpisodeInput& ep = episodes[idx];
                const SceneInput& scene =
                    data.scenes[static_cast<std::size_t>(ep.scene_index)];

                const SituationVector* pe_pose = nullptr;
                if (mode == Mode::GtAsIntermediate) {
                    pe_pose = &ep.gt;
                } else if (teacher && mode != Mode::NoSituationText) {
                    // Teacher forcing feeds the supervision pose (the corrupted
                    // one in corrupted mode) into the situational PE.
                    pe_pose = &target_poses[idx];
                }

                nn::Graph g;
                const ForwardResult fwd = model.forward(g, scene, ep, mode, pe_pose);
                if (fwd.decode_failed) result.decode_failures += 1;

                nn::Tensor loss;
                if (use_situation_loss) {
                    loss = sit::situation_loss(g, fwd.situation_pred, targets[idx],
                                               scene.tokens.mask, settings.lambda_rot);
                } else if (mode == Mode::DirectRegression) {
                    const Eigen::MatrixXd& target = regression_targets[idx];
                    nn::Tensor pos_term =
                        g.mse_loss(g.slice_cols(fwd.regression_pred, 0, 3),
                                   target.leftCols(3), Eigen::MatrixXd::Constant(1, 3, 1.0 / 3));
                    nn::Tensor rot_term =
                        g.l1_loss(g.slice_cols(fwd.regression_pred, 3, 6), target.rightCols(6),
                                  Eigen::MatrixXd::Constant(1, 6, 1.0 / 6));
                    loss = g.add(pos_term, g.scale(rot_term, settings.lambda_rot));
                }
                if (loss.valid()) log.situation_loss += loss.item();

                if (ep.answer_index >= 0) {
                    nn::Tensor qa =
                        g.softmax_cross_entropy(fwd.answer_logits, ep.answer_index);
                    log.qa_loss += qa.item();
                    loss = loss.valid() ? g.add(loss, qa) : qa;
                }
                if (!loss.valid()) continue;
                g.backward(loss);
            }
            optimizer.step(model.params());
            done = batch_end;
        }
        const double n = static_cast<double>(order.size());
        log.situation_loss /= n;
        log.qa_loss /= n;
        log.total_loss = log.situation_loss + log.qa_loss;
        result.log.push_back(log);
    }
    return result;
}

} // namespace situ3d::net
