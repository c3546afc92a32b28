#pragma once

#include <cstdint>
#include <string>

#include "situ3d/evalkit.hpp"
#include "situ3d/trainer.hpp"

namespace situ3d::cli {

// Every run parameter in one validated bag. Serialized into each run's
// output directory so a run can be reproduced from its artifacts alone.
struct RunConfig {
    // dataset
    std::uint64_t seed = 1;
    int n_scenes = 100;
    int episodes_per_scene = 10;
    double train_frac = 0.8;
    double room_min = 4.0;
    double room_max = 6.0;
    int objects_min = 3;
    int objects_max = 6;
    double point_density = 200.0;
    // tokenization
    double voxel_size = 0.4;
    int n_tokens = 256;
    // model
    int model_dim = 64;
    int heads = 4;
    int pe_hidden = 128;
    int fusion_layers = 2;
    int reencode_blocks = 2;
    int decoder_layers = 2;
    int ffn_mult = 2;
    int text_len = 100;
    // situation targets
    double sigma_scale = 2.0;
    double enlarge = 2.0;
    double lambda_rot = 1.0;
    std::string rot_supervision = "peak"; // peak | all
    // training
    std::string mode = "full";
    int epochs = 5;
    int batch_size = 16;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.05;
    double teacher_prob = 0.5;
    std::uint64_t train_seed = 1;
    std::string ablate_seeds = "1,2,3"; // comma-separated training seeds for ablation
    std::string ablate_modes = "full,no-situation-text,gt-as-intermediate,direct-regression";
    // output
    std::string out_dir = "runs/out";

    static RunConfig defaults() { return RunConfig{}; }
    /// 40 scenes / 400 episodes / dim 32 / 5 epochs; finishes in well under
    /// two minutes on one core.
    static RunConfig smoke();
    /// The smoke sizing scaled to 400 scenes / 4000 episodes.
    static RunConfig benchmark();

    void apply_file(const std::string& path);
    void apply_override(const std::string& key_equals_value);
    void set(const std::string& key, const std::string& value);
    void validate() const;
    std::string serialize() const;

    net::DataConfig data_config() const;
    net::ModelConfig model_config(int vocab_size, int feature_dim, int n_answers) const;
    net::TrainSettings train_settings() const;
    std::vector<std::uint64_t> ablation_seeds() const;
    std::vector<net::Mode> ablation_modes() const;
};

} // namespace situ3d::cli
