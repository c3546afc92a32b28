#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "situ3d/nn/adamw.hpp"
#include "situ3d/nn/checkpoint.hpp"
#include "situ3d/nn/gradcheck.hpp"
#include "situ3d/nn/modules.hpp"

using namespace situ3d;
using nn::Graph;
using nn::Mat;
using nn::ParameterSet;
using nn::Tensor;
using nn::Vec;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-scale, scale);
    return m;
}

// Scalar probe: weighted sum with fixed random weights, so every output
// entry contributes to the checked gradient.
Tensor probe(Graph& g, Tensor x, const Mat& weights) {
    return g.mse_loss(x, Mat::Zero(x.rows(), x.cols()), weights);
}

} // namespace

TEST_CASE("softmax basics") {
    Graph g;
    Mat x(1, 2);
    x << 0.0, 0.0;
    const Tensor y = g.softmax_rows(g.leaf(x, false), {1, 1});
    CHECK(y.value()(0, 0) == doctest::Approx(0.5));
    CHECK(y.value()(0, 1) == doctest::Approx(0.5));

    SUBCASE("masked keys get exactly zero and rows sum to one") {
        Rng rng(3);
        Graph g2;
        const Mat z = random_mat(5, 7, rng, 3.0);
        const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 1, 1};
        const Tensor s = g2.softmax_rows(g2.leaf(z, false), mask);
        for (Eigen::Index i = 0; i < 5; ++i) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < 7; ++j) {
                if (!mask[static_cast<std::size_t>(j)]) CHECK(s.value()(i, j) == 0.0);
                sum += s.value()(i, j);
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
    SUBCASE("fully masked keys are rejected") {
        Graph g3;
        CHECK_THROWS_AS(g3.softmax_rows(g3.leaf(Mat::Zero(2, 3), false), {0, 0, 0}),
                        ShapeMismatch);
    }
}

TEST_CASE("layer_norm of a constant row is zero before affine") {
    Graph g;
    ParameterSet ps;
    nn::LayerNorm ln(ps, "ln", 6);
    const Tensor y = ln.forward(g, g.leaf(Mat::Constant(2, 6, 3.7), false));
    // gamma=1, beta=0 at init, so output equals the normalized value
    CHECK(y.value().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("elementwise op gradients pass central differences") {
    Rng rng(11);
    ParameterSet ps;
    nn::Param& a = ps.create("a", 4, 5);
    a.value = random_mat(4, 5, rng);
    const Mat w = random_mat(4, 5, rng);

    SUBCASE("gelu") {
        auto loss = [&] {
            Graph g;
            const Tensor out = probe(g, g.gelu(g.param(ps.at("a"))), w);
            g.backward(out);
            return out.item();
        };
        auto fwd = [&] {
            Graph g;
            return probe(g, g.gelu(g.param(ps.at("a"))), w).item();
        };
        const auto report = nn::grad_check(ps, loss, fwd);
        CHECK_MESSAGE(report.pass(), report.summary());
    }
    SUBCASE("scale add sub cwise_mul slice concat") {
        nn::Param& b = ps.create("b", 4, 5);
        b.value = random_mat(4, 5, rng);
        Rng wrng(99);
        const Mat w2 = random_mat(8, 3, wrng);
        auto build = [&](Graph& g) {
            Tensor ta = g.param(ps.at("a"));
            Tensor tb = g.param(ps.at("b"));
            Tensor both = g.concat_rows(g.add(g.scale(ta, 1.7), tb),
                                        g.cwise_mul(g.sub(ta, tb), tb));
            Tensor left = g.slice_cols(both, 0, 3);
            return probe(g, left, w2);
        };
        auto loss = [&] {
            Graph g;
            const Tensor out = build(g);
            g.backward(out);
            return out.item();
        };
        auto fwd = [&] {
            Graph g;
            return build(g).item();
        };
        const auto report = nn::grad_check(ps, loss, fwd);
        CHECK_MESSAGE(report.pass(), report.summary());
    }
}

TEST_CASE("linear and mlp gradients pass central differences") {
    Rng rng(13);
    ParameterSet ps;
    nn::Mlp mlp(ps, "mlp", 4, 6, 3, rng);
    const Mat x = random_mat(5, 4, rng);
    const Mat w = random_mat(5, 3, rng);
    auto loss = [&] {
        Graph g;
        const Tensor out = probe(g, mlp.forward(g, g.constant(x)), w);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return probe(g, mlp.forward(g, g.constant(x)), w).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("layer_norm gradients pass central differences") {
    Rng rng(17);
    ParameterSet ps;
    nn::LayerNorm ln(ps, "ln", 5);
    nn::Param& x = ps.create("x", 4, 5);
    x.value = random_mat(4, 5, rng);
    const Mat w = random_mat(4, 5, rng);
    auto loss = [&] {
        Graph g;
        const Tensor out = probe(g, ln.forward(g, g.param(ps.at("x"))), w);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return probe(g, ln.forward(g, g.param(ps.at("x"))), w).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("attention: single kv token receives full weight") {
    Rng rng(19);
    ParameterSet ps;
    nn::MultiHeadAttention attn(ps, "attn", 8, 2, rng);
    Graph g;
    const Mat q = random_mat(3, 8, rng);
    const Mat kv = random_mat(1, 8, rng);
    const Tensor out = attn.forward(g, g.constant(q), g.constant(kv), {1});
    // attention weight over one key is 1, so output = wo(wv(kv) + bv) + bo
    Graph g2;
    const Tensor direct = attn.wo.forward(g2, attn.wv.forward(g2, g2.constant(kv)));
    for (Eigen::Index i = 0; i < 3; ++i)
        CHECK((out.value().row(i) - direct.value().row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("attention: fully masked keys fall back to the learned null pair") {
    Rng rng(23);
    ParameterSet ps;
    nn::MultiHeadAttention attn(ps, "attn", 8, 2, rng);
    Graph g;
    const Mat q = random_mat(4, 8, rng);
    const Mat kv = random_mat(3, 8, rng);
    const Tensor out = attn.forward(g, g.constant(q), g.constant(kv), {0, 0, 0});
    Graph g2;
    const Tensor direct = attn.wo.forward(g2, g2.param(*attn.null_v));
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK((out.value().row(i) - direct.value().row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("attention gradients pass central differences") {
    Rng rng(29);
    ParameterSet ps;
    nn::MultiHeadAttention attn(ps, "attn", 8, 2, rng);
    nn::Param& q = ps.create("q", 3, 8);
    q.value = random_mat(3, 8, rng);
    nn::Param& kv = ps.create("kv", 5, 8);
    kv.value = random_mat(5, 8, rng);
    const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1};
    const Mat w = random_mat(3, 8, rng);
    auto build = [&](Graph& g) {
        return probe(g, attn.forward(g, g.param(ps.at("q")), g.param(ps.at("kv")), mask), w);
    };
    auto loss = [&] {
        Graph g;
        const Tensor out = build(g);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return build(g).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());

    SUBCASE("null pair gradient flows when keys are empty") {
        const std::vector<std::uint8_t> none = {0, 0, 0, 0, 0};
        auto build2 = [&](Graph& g) {
            return probe(g, attn.forward(g, g.param(ps.at("q")), g.param(ps.at("kv")), none), w);
        };
        auto loss2 = [&] {
            Graph g;
            const Tensor out = build2(g);
            g.backward(out);
            return out.item();
        };
        auto fwd2 = [&] {
            Graph g;
            return build2(g).item();
        };
        const auto report2 = nn::grad_check(ps, loss2, fwd2);
        CHECK_MESSAGE(report2.pass(), report2.summary());
    }
}

TEST_CASE("transformer block gradients pass central differences") {
    Rng rng(31);
    ParameterSet ps;
    nn::TransformerBlock block(ps, "blk", 8, 2, 16, /*with_cross=*/true, rng);
    nn::Param& x = ps.create("x", 4, 8);
    x.value = random_mat(4, 8, rng);
    nn::Param& ctx = ps.create("ctx", 3, 8);
    ctx.value = random_mat(3, 8, rng);
    const std::vector<std::uint8_t> x_mask = {1, 1, 1, 0};
    const std::vector<std::uint8_t> ctx_mask = {1, 0, 1};
    const Mat w = random_mat(4, 8, rng);
    auto build = [&](Graph& g) {
        return probe(g,
                     block.forward(g, g.param(ps.at("x")), x_mask, g.param(ps.at("ctx")),
                                   ctx_mask),
                     w);
    };
    auto loss = [&] {
        Graph g;
        const Tensor out = build(g);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return build(g).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("loss op gradients pass central differences") {
    Rng rng(37);
    ParameterSet ps;
    nn::Param& x = ps.create("x", 6, 1);
    x.value = random_mat(6, 1, rng);
    nn::Param& y = ps.create("y", 4, 6);
    y.value = random_mat(4, 6, rng);
    nn::Param& z = ps.create("z", 1, 5);
    z.value = random_mat(1, 5, rng);

    Vec targets(6), weights(6);
    for (int i = 0; i < 6; ++i) {
        targets(i) = rng.uniform(0.05, 0.95);
        weights(i) = rng.uniform(0.1, 1.0);
    }
    Rng trng(5);
    const Mat l1_target = random_mat(4, 6, trng);
    const Mat l1_w = Mat::Constant(4, 6, 1.0 / 24);

    auto build = [&](Graph& g) {
        Tensor total = g.bce_with_logits(g.param(ps.at("x")), targets, weights);
        total = g.add(total, g.l1_loss(g.param(ps.at("y")), l1_target, l1_w));
        total = g.add(total, g.mse_loss(g.param(ps.at("y")), l1_target, l1_w));
        total = g.add(total, g.scale(g.softmax_cross_entropy(g.param(ps.at("z")), 2), 0.7));
        Tensor pooled = g.weighted_row_sum(g.param(ps.at("y")), Vec::Constant(4, 0.25));
        return g.add(total, g.mse_loss(pooled, Mat::Zero(1, 6), Mat::Constant(1, 6, 0.5)));
    };
    auto loss = [&] {
        Graph g;
        const Tensor out = build(g);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return build(g).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("gather and masked mean gradients pass central differences") {
    Rng rng(41);
    ParameterSet ps;
    nn::Param& table = ps.create("table", 7, 4);
    table.value = random_mat(7, 4, rng);
    const std::vector<int> ids = {2, 2, 5, 0};
    const std::vector<std::uint8_t> mask = {1, 0, 1, 1};
    const Mat w = random_mat(1, 4, rng);
    auto build = [&](Graph& g) {
        Tensor rows = g.gather_rows(g.param(ps.at("table")), ids);
        return probe(g, nn::masked_mean_rows(g, g.mask_rows(rows, mask), mask), w);
    };
    auto loss = [&] {
        Graph g;
        const Tensor out = build(g);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return build(g).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("a corrupted backward fails the gradient check") {
    Rng rng(43);
    ParameterSet ps;
    nn::Param& a = ps.create("a", 3, 3);
    a.value = random_mat(3, 3, rng);
    const Mat w = random_mat(3, 3, rng);
    auto loss = [&] {
        Graph g;
        const Tensor out = probe(g, g.gelu(g.param(ps.at("a"))), w);
        g.backward(out);
        ps.at("a").grad.array() += 0.05; // deliberately wrong
        return out.item();
    };
    auto fwd = [&] {
        Graph g;
        return probe(g, g.gelu(g.param(ps.at("a"))), w).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_FALSE(report.pass());
}

TEST_CASE("non-finite values are rejected") {
    Graph g;
    Mat bad(1, 2);
    bad << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(g.constant(bad), NonFinite);
}

TEST_CASE("adamw") {
    SUBCASE("descends on f(w) = w^2") {
        ParameterSet ps;
        nn::Param& w = ps.create("w", 1, 1);
        w.value(0, 0) = 1.0;
        nn::AdamW opt(nn::AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
        w.grad(0, 0) = 2.0 * w.value(0, 0);
        opt.step(ps);
        CHECK(w.value(0, 0) < 1.0);
    }
    SUBCASE("zero gradient and zero decay leaves parameters unchanged") {
        ParameterSet ps;
        nn::Param& w = ps.create("w", 2, 2);
        w.value.setConstant(0.7);
        nn::AdamW opt(nn::AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
        opt.step(ps);
        CHECK((w.value.array() == 0.7).all());
    }
    SUBCASE("no_decay parameters are exempt from decay") {
        ParameterSet ps;
        nn::Param& w = ps.create("w", 1, 1, /*no_decay=*/true);
        w.value(0, 0) = 0.5;
        nn::AdamW opt(nn::AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.9});
        opt.step(ps);
        CHECK(w.value(0, 0) == doctest::Approx(0.5));
        nn::Param& v = ps.create("v", 1, 1);
        v.value(0, 0) = 0.5;
        opt.step(ps);
        CHECK(v.value(0, 0) < 0.5);
    }
    SUBCASE("200 steps reach a near-stationary point on a 2d quadratic") {
        // f(w) = 0.5 (w0^2 + 10 w1^2), minimum at the origin
        ParameterSet ps;
        nn::Param& w = ps.create("w", 1, 2);
        w.value << 1.5, -2.0;
        nn::AdamW opt(nn::AdamWConfig{0.05, 0.9, 0.999, 1e-8, 0.0});
        for (int i = 0; i < 200; ++i) {
            w.grad(0, 0) = w.value(0, 0);
            w.grad(0, 1) = 10.0 * w.value(0, 1);
            opt.step(ps);
        }
        const double grad_norm =
            std::hypot(w.value(0, 0), 10.0 * w.value(0, 1));
        CHECK(grad_norm < 1e-3);
    }
}

TEST_CASE("checkpoint round trip") {
    Rng rng(47);
    ParameterSet ps;
    ps.create("alpha", 3, 4).value = random_mat(3, 4, rng);
    ps.create("beta", 1, 2).value = random_mat(1, 2, rng);
    const auto path = std::filesystem::temp_directory_path() / "situ3d_ckpt_test.tnn";
    nn::save_checkpoint(path.string(), ps, {{"note", "unit"}});

    ParameterSet ps2;
    ps2.create("alpha", 3, 4);
    ps2.create("beta", 1, 2);
    const auto meta = nn::load_checkpoint(path.string(), ps2);
    CHECK(meta.at("note") == "unit");
    CHECK(ps2.at("alpha").value == ps.at("alpha").value);
    CHECK(ps2.at("beta").value == ps.at("beta").value);

    SUBCASE("shape mismatch is rejected") {
        ParameterSet ps3;
        ps3.create("alpha", 3, 5);
        ps3.create("beta", 1, 2);
        CHECK_THROWS_AS(nn::load_checkpoint(path.string(), ps3), SchemaError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("forward determinism") {
    Rng rng(53);
    ParameterSet ps;
    nn::TransformerBlock block(ps, "blk", 8, 2, 16, true, rng);
    const Mat x = random_mat(4, 8, rng);
    const Mat ctx = random_mat(3, 8, rng);
    const std::vector<std::uint8_t> xm = {1, 1, 1, 1};
    const std::vector<std::uint8_t> cm = {1, 1, 0};
    Graph g1, g2;
    const Tensor a = block.forward(g1, g1.constant(x), xm, g1.constant(ctx), cm);
    const Tensor b = block.forward(g2, g2.constant(x), xm, g2.constant(ctx), cm);
    CHECK(a.value() == b.value());
}
