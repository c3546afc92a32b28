#include "situ3d/nn/modules.hpp"

#include <cmath>

namespace situ3d::nn {

Linear::Linear(ParameterSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out,
               Rng& rng) {
    w = &ps.create_fan_in(prefix + ".w", in, out, rng);
    b = &ps.create(prefix + ".b", 1, out, /*no_decay=*/true);
}

Tensor Linear::forward(Graph& g, Tensor x) const {
    return g.add_rowvec(g.matmul(x, g.param(*w)), g.param(*b));
}

LayerNorm::LayerNorm(ParameterSet& ps, const std::string& prefix, Eigen::Index dim) {
    gamma = &ps.create(prefix + ".gamma", 1, dim, /*no_decay=*/true);
    gamma->value.setOnes();
    beta = &ps.create(prefix + ".beta", 1, dim, /*no_decay=*/true);
}

Tensor LayerNorm::forward(Graph& g, Tensor x) const {
    return g.layer_norm(x, g.param(*gamma), g.param(*beta));
}

Mlp::Mlp(ParameterSet& ps, const std::string& prefix, Eigen::Index in, Eigen::Index hidden,
         Eigen::Index out, Rng& rng)
    : fc1(ps, prefix + ".fc1", in, hidden, rng), fc2(ps, prefix + ".fc2", hidden, out, rng) {}

Tensor Mlp::forward(Graph& g, Tensor x) const {
    return fc2.forward(g, g.gelu(fc1.forward(g, x)));
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& ps, const std::string& prefix,
                                       Eigen::Index dim, int heads, Rng& rng)
    : wq(ps, prefix + ".wq", dim, dim, rng),
      wk(ps, prefix + ".wk", dim, dim, rng),
      wv(ps, prefix + ".wv", dim, dim, rng),
      wo(ps, prefix + ".wo", dim, dim, rng),
      heads(heads) {
    if (dim % heads != 0) throw ConfigError("model dim must be divisible by head count");
    null_k = &ps.create_fan_in(prefix + ".null_k", 1, dim, rng, /*no_decay=*/true);
    null_v = &ps.create_fan_in(prefix + ".null_v", 1, dim, rng, /*no_decay=*/true);
}

Tensor MultiHeadAttention::forward(Graph& g, Tensor queries, Tensor keys_values,
                                   const std::vector<std::uint8_t>& kv_mask) const {
    if (static_cast<Eigen::Index>(kv_mask.size()) != keys_values.rows())
        throw ShapeMismatch("attention kv mask length mismatch");
    bool any_key = false;
    for (const auto m : kv_mask) any_key = any_key || (m != 0);

    const Eigen::Index dim = queries.cols();
    const Eigen::Index dh = dim / heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = wq.forward(g, queries);
    Tensor k, v;
    std::vector<std::uint8_t> mask;
    if (any_key) {
        k = wk.forward(g, keys_values);
        v = wv.forward(g, keys_values);
        mask = kv_mask;
    } else {
        k = g.param(*null_k);
        v = g.param(*null_v);
        mask = {1};
    }

    std::vector<Tensor> ctx;
    ctx.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Tensor qh = g.slice_cols(q, h * dh, dh);
        Tensor kh = g.slice_cols(k, h * dh, dh);
        Tensor vh = g.slice_cols(v, h * dh, dh);
        Tensor scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt_dh);
        Tensor attn = g.softmax_rows(scores, mask);
        ctx.push_back(g.matmul(attn, vh));
    }
    return wo.forward(g, g.concat_cols(ctx));
}

FeedForward::FeedForward(ParameterSet& ps, const std::string& prefix, Eigen::Index dim,
                         Eigen::Index hidden, Rng& rng)
    : fc1(ps, prefix + ".fc1", dim, hidden, rng), fc2(ps, prefix + ".fc2", hidden, dim, rng) {}

Tensor FeedForward::forward(Graph& g, Tensor x) const {
    return fc2.forward(g, g.gelu(fc1.forward(g, x)));
}

TransformerBlock::TransformerBlock(ParameterSet& ps, const std::string& prefix, Eigen::Index dim,
                                   int heads, Eigen::Index ffn_hidden, bool with_cross, Rng& rng)
    : ln_self(ps, prefix + ".ln_self", dim),
      ln_ffn(ps, prefix + ".ln_ffn", dim),
      self_attn(ps, prefix + ".self", dim, heads, rng),
      ffn(ps, prefix + ".ffn", dim, ffn_hidden, rng),
      has_cross(with_cross) {
    if (with_cross) {
        ln_cross = LayerNorm(ps, prefix + ".ln_cross", dim);
        cross_attn = MultiHeadAttention(ps, prefix + ".cross", dim, heads, rng);
    }
}

Tensor TransformerBlock::forward(Graph& g, Tensor x, const std::vector<std::uint8_t>& x_mask,
                                 Tensor context,
                                 const std::vector<std::uint8_t>& context_mask) const {
    Tensor h = ln_self.forward(g, x);
    x = g.add(x, self_attn.forward(g, h, h, x_mask));
    if (has_cross) {
        x = g.add(x, cross_attn.forward(g, ln_cross.forward(g, x), context, context_mask));
    }
    x = g.add(x, ffn.forward(g, ln_ffn.forward(g, x)));
    return g.mask_rows(x, x_mask);
}

Tensor TransformerBlock::forward_self_only(Graph& g, Tensor x,
                                           const std::vector<std::uint8_t>& x_mask) const {
    if (has_cross) {
        std::vector<std::uint8_t> empty(1, 0);
        Tensor dummy = g.constant(Mat::Zero(1, x.cols()));
        return forward(g, x, x_mask, dummy, empty);
    }
    Tensor h = ln_self.forward(g, x);
    x = g.add(x, self_attn.forward(g, h, h, x_mask));
    x = g.add(x, ffn.forward(g, ln_ffn.forward(g, x)));
    return g.mask_rows(x, x_mask);
}

Tensor masked_mean_rows(Graph& g, Tensor x, const std::vector<std::uint8_t>& mask) {
    if (static_cast<Eigen::Index>(mask.size()) != x.rows())
        throw ShapeMismatch("masked mean mask length mismatch");
    double n = 0.0;
    for (const auto m : mask) n += m ? 1.0 : 0.0;
    if (n == 0.0) throw NoRealTokens("masked mean over zero rows");
    Vec w(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) w(i) = mask[static_cast<std::size_t>(i)] ? 1.0 / n : 0.0;
    return g.weighted_row_sum(x, w);
}

} // namespace situ3d::nn
