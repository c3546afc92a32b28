#pragma once

#include <string>
#include <vector>

#include "situ3d/nn/graph.hpp"

namespace situ3d::nn {

struct Linear {
    Param* w = nullptr;
    Param* b = nullptr;

    Linear() = default;
    Linear(ParameterSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out,
           Rng& rng);
    Tensor forward(Graph& g, Tensor x) const;
};

struct LayerNorm {
    Param* gamma = nullptr;
    Param* beta = nullptr;

    LayerNorm() = default;
    LayerNorm(ParameterSet& ps, const std::string& prefix, Eigen::Index dim);
    Tensor forward(Graph& g, Tensor x) const;
};

// Two-layer perceptron with a GELU between, the building block used for
// positional embeddings and prediction heads.
struct Mlp {
    Linear fc1, fc2;

    Mlp() = default;
    Mlp(ParameterSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
        Eigen::Index out, Rng& rng);
    Tensor forward(Graph& g, Tensor x) const;
};

// Multi-head attention with a learned null key/value pair. When every key is
// masked the queries attend to the null pair instead, so an empty situational
// input degrades to a learned constant rather than NaN.
struct MultiHeadAttention {
    Linear wq, wk, wv, wo;
    Param* null_k = nullptr;
    Param* null_v = nullptr;
    int heads = 1;

    MultiHeadAttention() = default;
    MultiHeadAttention(ParameterSet& ps, const std::string& prefix, Eigen::Index dim, int heads,
                       Rng& rng);
    Tensor forward(Graph& g, Tensor queries, Tensor keys_values,
                   const std::vector<std::uint8_t>& kv_mask) const;
};

struct FeedForward {
    Linear fc1, fc2;

    FeedForward() = default;
    FeedForward(ParameterSet& ps, const std::string& prefix, Eigen::Index dim,
                Eigen::Index hidden, Rng& rng);
    Tensor forward(Graph& g, Tensor x) const;
};

// Pre-norm block: self-attention, optional cross-attention, feed-forward,
// each behind a residual. Output rows outside `x_mask` are re-zeroed.
struct TransformerBlock {
    LayerNorm ln_self, ln_cross, ln_ffn;
    MultiHeadAttention self_attn, cross_attn;
    FeedForward ffn;
    bool has_cross = false;

    TransformerBlock() = default;
    TransformerBlock(ParameterSet& ps, const std::string& prefix, Eigen::Index dim, int heads,
                     Eigen::Index ffn_hidden, bool with_cross, Rng& rng);
    Tensor forward(Graph& g, Tensor x, const std::vector<std::uint8_t>& x_mask, Tensor context,
                   const std::vector<std::uint8_t>& context_mask) const;
    Tensor forward_self_only(Graph& g, Tensor x, const std::vector<std::uint8_t>& x_mask) const;
};

/// Masked mean over rows: sum(x[mask]) / count(mask), as a 1 x D tensor.
Tensor masked_mean_rows(Graph& g, Tensor x, const std::vector<std::uint8_t>& mask);

} // namespace situ3d::nn
