#pragma once

#include <optional>
#include <string>

#include "situ3d/scenegen.hpp"

namespace situ3d::cli {

struct PlotInputs {
    const scene::Scene* scene = nullptr;
    const scene::Episode* episode = nullptr;
    std::optional<geom::SituationVector> prediction;
    // Optional per-token activation overlays (before/after re-encoding).
    const Eigen::Matrix<double, Eigen::Dynamic, 3>* anchors = nullptr;
    std::optional<Eigen::VectorXd> activation_before;
    std::optional<Eigen::VectorXd> activation_after;
};

// Top-down SVG: room outline, object footprints, the ground-truth arrow in
// red and the predicted arrow in blue, plus optional activation heatmaps.
std::string render_scene_svg(const PlotInputs& inputs);

void write_svg(const std::string& path, const std::string& svg);

} // namespace situ3d::cli
