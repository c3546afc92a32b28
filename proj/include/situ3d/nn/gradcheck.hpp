#pragma once

#include <functional>
#include <string>
#include <vector>

#include "situ3d/nn/graph.hpp"

namespace situ3d::nn {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    double max_abs_analytic = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;
    double tolerance = 0.0;

    bool pass() const { return worst < tolerance; }
    std::string summary() const;
};

// Central finite differences over every entry of every parameter.
// `loss_backward` must build a fresh graph, run backward, and return the
// loss; `loss_forward` evaluates the same loss without gradients.
GradCheckReport grad_check(ParameterSet& params, const std::function<double()>& loss_backward,
                           const std::function<double()>& loss_forward, double h = 1e-4,
                           double tolerance = 1e-4);

} // namespace situ3d::nn
