#pragma once

#include <optional>
#include <string>

#include "situ3d/config.hpp"
#include "situ3d/evalkit.hpp"

namespace situ3d::cli {

// Library entry points behind the CLI subcommands. Every command writes its
// resolved configuration next to its outputs and writes files atomically.

/// Dataset directory layout: resolved.cfg, scenes.jsonl, episodes.jsonl,
/// clouds/scene_%06d.cloud.
void cmd_generate(const RunConfig& config);

net::Dataset load_dataset(const std::string& data_dir, const RunConfig& config);

/// Trains per config and writes checkpoint.tnn plus train_log.txt.
void cmd_train(const RunConfig& config, const std::string& data_dir);

/// Evaluates a checkpoint and writes report.txt; returns the report.
eval::MetricsReport cmd_eval(const RunConfig& config, const std::string& data_dir,
                             const std::string& checkpoint_path);

/// Runs the mode x seed ablation grid and writes ablation.txt plus one
/// report per cell.
eval::AblationTable cmd_ablate(const RunConfig& config, const std::string& data_dir);

/// Renders one episode to SVG; with a checkpoint the prediction arrow and
/// the before/after token activations are included.
void cmd_plot(const RunConfig& config, const std::string& data_dir, int episode_index,
              const std::optional<std::string>& checkpoint_path, const std::string& out_svg);

void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

} // namespace situ3d::cli
