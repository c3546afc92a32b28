#include <CLI11.hpp>
#include <iostream>

#include "situ3d/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_file;
    std::string preset = "default";
    std::vector<std::string> overrides;
    std::string out_dir;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_file, "key = value configuration file");
    cmd->add_option("--preset", args.preset, "default | smoke | benchmark")
        ->check(CLI::IsMember({"default", "smoke", "benchmark"}));
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set epochs=3");
    cmd->add_option("-o,--out", args.out_dir, "output directory (overrides out_dir)");
    cmd->add_option("--seed", args.seed, "dataset seed (overrides seed)");
}

situ3d::cli::RunConfig resolve(const CommonArgs& args) {
    situ3d::cli::RunConfig config;
    if (args.preset == "smoke") config = situ3d::cli::RunConfig::smoke();
    if (args.preset == "benchmark") config = situ3d::cli::RunConfig::benchmark();
    if (!args.config_file.empty()) config.apply_file(args.config_file);
    for (const auto& kv : args.overrides) config.apply_override(kv);
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"situated 3D question answering: dataset generation, training, evaluation"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, ablate_args, plot_args;
    std::string data_dir, checkpoint, svg_out = "plot.svg";
    int episode_index = 0;
    std::string plot_checkpoint;

    CLI::App* gen = app.add_subcommand("generate", "write a synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "train a model on a generated dataset");
    add_common(train, train_args);
    train->add_option("-d,--data", data_dir, "dataset directory")->required();

    CLI::App* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(evalc, eval_args);
    evalc->add_option("-d,--data", data_dir, "dataset directory")->required();
    evalc->add_option("-k,--checkpoint", checkpoint, "checkpoint file")->required();

    CLI::App* ablate = app.add_subcommand("ablate", "run the mode x seed ablation grid");
    add_common(ablate, ablate_args);
    ablate->add_option("-d,--data", data_dir, "dataset directory")->required();

    CLI::App* plot = app.add_subcommand("plot", "render an episode as SVG");
    add_common(plot, plot_args);
    plot->add_option("-d,--data", data_dir, "dataset directory")->required();
    plot->add_option("-e,--episode", episode_index, "episode index in episodes.jsonl");
    plot->add_option("-k,--checkpoint", plot_checkpoint,
                     "checkpoint for the prediction arrow and activation maps");
    plot->add_option("--svg", svg_out, "output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            situ3d::cli::cmd_generate(resolve(gen_args));
        } else if (train->parsed()) {
            situ3d::cli::cmd_train(resolve(train_args), data_dir);
        } else if (evalc->parsed()) {
            const auto report = situ3d::cli::cmd_eval(resolve(eval_args), data_dir, checkpoint);
            std::cout << report.to_text();
        } else if (ablate->parsed()) {
            const auto table = situ3d::cli::cmd_ablate(resolve(ablate_args), data_dir);
            std::cout << table.to_text();
        } else if (plot->parsed()) {
            std::optional<std::string> ckpt;
            if (!plot_checkpoint.empty()) ckpt = plot_checkpoint;
            situ3d::cli::cmd_plot(resolve(plot_args), data_dir, episode_index, ckpt, svg_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
