#pragma once

#include <string>
#include <vector>

#include "situ3d/nn/adamw.hpp"
#include "situ3d/scenegen.hpp"
#include "situ3d/situnet.hpp"

namespace situ3d::net {

struct DataConfig {
    scene::SceneConfig scene_cfg;
    scene::EpisodeConfig episode_cfg;
    int n_scenes = 100;
    int episodes_per_scene = 10;
    double train_frac = 0.8;
    double voxel_size = 0.4;
    int n_tokens = 256;
    int text_len = 100;
    std::uint64_t seed = 1;
};

// Tokenized scenes plus tokenized episodes, split by scene. The answer
// vocabulary comes from the training split (frequency order, ties broken
// lexicographically).
struct Dataset {
    Vocabulary vocab;
    std::vector<SceneInput> scenes;
    std::vector<scene::Scene> scene_geoms;   // aligned with `scenes`
    std::vector<scene::Episode> raw_episodes; // train then test, generation order
    std::vector<EpisodeInput> train;
    std::vector<EpisodeInput> test;
    std::vector<std::string> answer_vocab;
    int text_len = 100;

    int n_answers() const { return static_cast<int>(answer_vocab.size()); }
};

/// Raw generation output shared by in-memory training and file export.
struct RawDataset {
    std::vector<scene::Scene> scenes;
    std::vector<std::string> splits; // "train" | "test", aligned with scenes
    std::vector<scene::Episode> episodes;
};

RawDataset generate_raw_dataset(const DataConfig& config);

/// Tokenize a raw dataset into model-ready form. Lenient tokenization maps
/// unknown words to UNK (needed for externally authored annotation files).
Dataset assemble_dataset(const RawDataset& raw, const DataConfig& config, bool strict_tokens);

Dataset build_dataset(const DataConfig& config);

std::vector<std::string> build_answer_vocab(const std::vector<std::string>& train_answers);

/// Tokenize a raw episode against a scene table; lenient tokenization maps
/// out-of-vocabulary words to UNK (for externally loaded annotations).
EpisodeInput make_episode_input(const scene::Episode& ep, int scene_index,
                                const Vocabulary& vocab,
                                const std::vector<std::string>& answer_vocab, int text_len,
                                bool strict);

struct TrainSettings {
    Mode mode = Mode::Full;
    int epochs = 5;
    int batch_size = 16;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.05;
    double teacher_prob = 0.5;
    double sigma_scale = 2.0; // sigma = sigma_scale * anchor pitch
    double enlarge = 2.0;
    double lambda_rot = 1.0;
    sit::RotSupervision rot_supervision = sit::RotSupervision::NearPeak;
    std::uint64_t seed = 1;
};

struct EpochLog {
    int epoch = 0;
    double situation_loss = 0.0;
    double qa_loss = 0.0;
    double total_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int decode_failures = 0;

    std::string to_text() const;
};

TrainResult train_model(SituNet& model, const Dataset& data, const TrainSettings& settings);

/// Uniform poses within each episode's room bounds, the corrupted-supervision
/// training targets. Deterministic per (seed, episode index).
std::vector<SituationVector> corrupted_poses(const Dataset& data, std::uint64_t seed);

} // namespace situ3d::net
