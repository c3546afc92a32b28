#include "situ3d/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "situ3d/nn/checkpoint.hpp"
#include "situ3d/svgplot.hpp"

namespace situ3d::cli {

namespace fs = std::filesystem;

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw IoError("failed writing: " + tmp);
    }
    fs::rename(tmp, path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string cloud_path(const std::string& dir, int scene_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%06d.cloud", scene_id);
    return dir + "/clouds/" + buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

int meta_int(const std::map<std::string, std::string>& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw SchemaError("checkpoint meta missing key: " + key);
    return std::stoi(it->second);
}

net::ModelConfig model_config_from_meta(const std::map<std::string, std::string>& meta) {
    net::ModelConfig mc;
    mc.vocab_size = meta_int(meta, "vocab_size");
    mc.feature_dim = meta_int(meta, "feature_dim");
    mc.n_answers = meta_int(meta, "n_answers");
    mc.text_len = meta_int(meta, "text_len");
    mc.dim = meta_int(meta, "dim");
    mc.pe_hidden = meta_int(meta, "pe_hidden");
    mc.heads = meta_int(meta, "heads");
    mc.fusion_layers = meta_int(meta, "fusion_layers");
    mc.reencode_blocks = meta_int(meta, "reencode_blocks");
    mc.decoder_layers = meta_int(meta, "decoder_layers");
    mc.ffn_mult = meta_int(meta, "ffn_mult");
    mc.init_seed = static_cast<std::uint64_t>(meta_int(meta, "init_seed"));
    return mc;
}

std::map<std::string, std::string> meta_from_model(const net::SituNet& model,
                                                   const net::Dataset& data,
                                                   const std::string& mode) {
    const net::ModelConfig& mc = model.config();
    std::map<std::string, std::string> meta;
    meta["vocab_size"] = std::to_string(mc.vocab_size);
    meta["feature_dim"] = std::to_string(mc.feature_dim);
    meta["n_answers"] = std::to_string(mc.n_answers);
    meta["text_len"] = std::to_string(mc.text_len);
    meta["dim"] = std::to_string(mc.dim);
    meta["pe_hidden"] = std::to_string(mc.pe_hidden);
    meta["heads"] = std::to_string(mc.heads);
    meta["fusion_layers"] = std::to_string(mc.fusion_layers);
    meta["reencode_blocks"] = std::to_string(mc.reencode_blocks);
    meta["decoder_layers"] = std::to_string(mc.decoder_layers);
    meta["ffn_mult"] = std::to_string(mc.ffn_mult);
    meta["init_seed"] = std::to_string(mc.init_seed);
    meta["mode"] = mode;
    meta["answer_vocab"] = join(data.answer_vocab, ',');
    return meta;
}

void rebind_answers(net::Dataset& data, const std::vector<std::string>& answer_vocab) {
    data.answer_vocab = answer_vocab;
    auto rebind = [&](net::EpisodeInput& ep) {
        ep.answer_index = -1;
        for (std::size_t i = 0; i < answer_vocab.size(); ++i)
            if (answer_vocab[i] == ep.answer_text) ep.answer_index = static_cast<int>(i);
    };
    for (auto& ep : data.train) rebind(ep);
    for (auto& ep : data.test) rebind(ep);
}

int feature_dim_of(const net::Dataset& data) {
    if (data.scenes.empty()) throw ConfigError("dataset has no scenes");
    return static_cast<int>(data.scenes.front().tokens.features.cols());
}

} // namespace

void cmd_generate(const RunConfig& config) {
    config.validate();
    const net::RawDataset raw = net::generate_raw_dataset(config.data_config());
    fs::create_directories(config.out_dir + "/clouds");

    write_text_atomic(config.out_dir + "/resolved.cfg", config.serialize());
    {
        const std::string tmp = config.out_dir + "/scenes.jsonl.tmp";
        scene::write_scenes(tmp, raw.scenes, raw.splits);
        fs::rename(tmp, config.out_dir + "/scenes.jsonl");
    }
    {
        const std::string tmp = config.out_dir + "/episodes.jsonl.tmp";
        scene::write_annotations(tmp, raw.episodes);
        fs::rename(tmp, config.out_dir + "/episodes.jsonl");
    }
    for (const auto& s : raw.scenes) {
        const std::string path = cloud_path(config.out_dir, s.id);
        vox::write_cloud(path + ".tmp", s.cloud);
        fs::rename(path + ".tmp", path);
    }
}

net::Dataset load_dataset(const std::string& data_dir, const RunConfig& config) {
    net::RawDataset raw;
    for (auto& [s, split] : scene::load_scenes(data_dir + "/scenes.jsonl")) {
        s.cloud = vox::read_cloud(cloud_path(data_dir, s.id));
        raw.scenes.push_back(std::move(s));
        raw.splits.push_back(split);
    }
    for (auto& ep : scene::load_annotations(data_dir + "/episodes.jsonl"))
        raw.episodes.push_back(std::move(ep));
    return net::assemble_dataset(raw, config.data_config(), /*strict_tokens=*/false);
}

void cmd_train(const RunConfig& config, const std::string& data_dir) {
    config.validate();
    net::Dataset data = load_dataset(data_dir, config);
    net::SituNet model(
        config.model_config(data.vocab.size(), feature_dim_of(data), data.n_answers()));
    const net::TrainResult result = net::train_model(model, data, config.train_settings());

    fs::create_directories(config.out_dir);
    write_text_atomic(config.out_dir + "/resolved.cfg", config.serialize());
    write_text_atomic(config.out_dir + "/train_log.txt", result.to_text());
    const std::string ckpt = config.out_dir + "/checkpoint.tnn";
    nn::save_checkpoint(ckpt + ".tmp", model.params(), meta_from_model(model, data, config.mode));
    fs::rename(ckpt + ".tmp", ckpt);
}

eval::MetricsReport cmd_eval(const RunConfig& config, const std::string& data_dir,
                             const std::string& checkpoint_path) {
    config.validate();
    net::Dataset data = load_dataset(data_dir, config);
    const auto meta = nn::read_checkpoint_meta(checkpoint_path);
    net::SituNet model(model_config_from_meta(meta));
    nn::load_checkpoint(checkpoint_path, model.params());

    const auto vocab_it = meta.find("answer_vocab");
    if (vocab_it == meta.end()) throw SchemaError("checkpoint meta missing answer_vocab");
    rebind_answers(data, split(vocab_it->second, ','));
    if (model.config().feature_dim != feature_dim_of(data))
        throw ShapeMismatch("checkpoint feature width does not match the dataset tokens");

    const eval::MetricsReport report =
        eval::evaluate_model(model, data, net::parse_mode(config.mode));
    fs::create_directories(config.out_dir);
    write_text_atomic(config.out_dir + "/resolved.cfg", config.serialize());
    write_text_atomic(config.out_dir + "/report.txt", report.to_text());
    return report;
}

eval::AblationTable cmd_ablate(const RunConfig& config, const std::string& data_dir) {
    config.validate();
    const net::Dataset data = load_dataset(data_dir, config);
    const net::ModelConfig mc =
        config.model_config(data.vocab.size(), feature_dim_of(data), data.n_answers());
    const eval::AblationTable table = eval::run_ablation_suite(
        data, config.ablation_modes(), config.ablation_seeds(), mc, config.train_settings());

    fs::create_directories(config.out_dir);
    write_text_atomic(config.out_dir + "/resolved.cfg", config.serialize());
    write_text_atomic(config.out_dir + "/ablation.txt", table.to_text());
    for (const auto& cell : table.cells) {
        write_text_atomic(config.out_dir + "/report_" + cell.mode + "_" +
                              std::to_string(cell.seed) + ".txt",
                          cell.report.to_text());
    }
    return table;
}

void cmd_plot(const RunConfig& config, const std::string& data_dir, int episode_index,
              const std::optional<std::string>& checkpoint_path, const std::string& out_svg) {
    config.validate();
    net::Dataset data = load_dataset(data_dir, config);
    const auto& episodes = data.raw_episodes;
    if (episode_index < 0 || episode_index >= static_cast<int>(episodes.size()))
        throw ConfigError("episode index out of range");
    const scene::Episode& episode = episodes[static_cast<std::size_t>(episode_index)];

    int scene_index = -1;
    for (std::size_t i = 0; i < data.scene_geoms.size(); ++i)
        if (data.scene_geoms[i].id == episode.scene_id) scene_index = static_cast<int>(i);
    if (scene_index < 0) throw SchemaError("episode references a scene missing from the dataset");

    PlotInputs inputs;
    inputs.scene = &data.scene_geoms[static_cast<std::size_t>(scene_index)];
    inputs.episode = &episode;

    Eigen::VectorXd act_before, act_after;
    if (checkpoint_path.has_value()) {
        const auto meta = nn::read_checkpoint_meta(*checkpoint_path);
        net::SituNet model(model_config_from_meta(meta));
        nn::load_checkpoint(*checkpoint_path, model.params());
        const auto vocab_it = meta.find("answer_vocab");
        if (vocab_it == meta.end()) throw SchemaError("checkpoint meta missing answer_vocab");
        rebind_answers(data, split(vocab_it->second, ','));

        const net::SceneInput& scene_in = data.scenes[static_cast<std::size_t>(scene_index)];
        const net::EpisodeInput ep_in =
            net::make_episode_input(episode, scene_index, data.vocab, data.answer_vocab,
                                    data.text_len, /*strict=*/false);
        nn::Graph g;
        const net::ForwardResult fwd =
            model.forward(g, scene_in, ep_in, net::parse_mode(config.mode), nullptr,
                          /*record_activations=*/true);
        inputs.prediction = fwd.reported_estimate;
        act_before = fwd.activation_before;
        act_after = fwd.activation_after;
        inputs.anchors = &scene_in.tokens.anchors;
        inputs.activation_before = act_before;
        inputs.activation_after = act_after;
        const std::string svg = render_scene_svg(inputs);
        write_text_atomic(out_svg, svg);
        return;
    }
    write_text_atomic(out_svg, render_scene_svg(inputs));
}

} // namespace situ3d::cli
