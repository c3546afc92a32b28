#pragma once

#include "situ3d/nn/graph.hpp"

namespace situ3d::nn {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.05;
};

// Decoupled weight decay; parameters flagged no_decay (biases, layer norms)
// are exempt.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    void step(ParameterSet& params);
    std::int64_t step_count() const { return t_; }
    AdamWConfig& config() { return cfg_; }

private:
    AdamWConfig cfg_;
    std::int64_t t_ = 0;
};

} // namespace situ3d::nn
