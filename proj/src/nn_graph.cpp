#include "situ3d/nn/graph.hpp"

#include <cmath>

namespace situ3d::nn {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_grad_scalar(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}
} // namespace

Param& ParameterSet::create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                            bool no_decay) {
    if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
    params_.emplace_back();
    Param& p = params_.back();
    p.name = name;
    p.value = Mat::Zero(rows, cols);
    p.grad = Mat::Zero(rows, cols);
    p.m1 = Mat::Zero(rows, cols);
    p.m2 = Mat::Zero(rows, cols);
    p.no_decay = no_decay;
    index_.emplace_back(name, params_.size() - 1);
    return p;
}

Param& ParameterSet::create_fan_in(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                   Rng& rng, bool no_decay) {
    Param& p = create(name, rows, cols, no_decay);
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) p.value(i, j) = rng.uniform(-bound, bound);
    return p;
}

Param& ParameterSet::at(const std::string& name) {
    for (const auto& [n, idx] : index_)
        if (n == name) return params_[idx];
    throw ConfigError("unknown parameter: " + name);
}

const Param& ParameterSet::at(const std::string& name) const {
    for (const auto& [n, idx] : index_)
        if (n == name) return params_[idx];
    throw ConfigError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& [n, idx] : index_)
        if (n == name) return true;
    return false;
}

Eigen::Index ParameterSet::total_size() const {
    Eigen::Index total = 0;
    for (const auto& p : params_) total += p.size();
    return total;
}

void ParameterSet::zero_grads() {
    for (auto& p : params_) p.grad.setZero();
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw ShapeMismatch("item() requires a 1x1 tensor");
    return node_->value(0, 0);
}

void Graph::check_finite(const Mat& m, const char* op) {
    if (!m.allFinite()) throw NonFinite(std::string("non-finite values produced by ") + op);
}

Node* Graph::make(Mat value, bool needs_grad) {
    nodes_.emplace_back();
    Node* n = &nodes_.back();
    n->value = std::move(value);
    n->needs_grad = needs_grad;
    order_.push_back(n);
    return n;
}

Mat& Graph::grad_buf(Node* n) {
    if (!n->grad_ready) {
        n->grad = Mat::Zero(n->value.rows(), n->value.cols());
        n->grad_ready = true;
    }
    return n->grad;
}

Tensor Graph::constant(Mat v) {
    check_finite(v, "constant");
    return Tensor(make(std::move(v), false));
}

Tensor Graph::leaf(Mat v, bool needs_grad) {
    check_finite(v, "leaf");
    return Tensor(make(std::move(v), needs_grad));
}

Tensor Graph::param(Param& p) {
    Node* n = make(p.value, true);
    bindings_.emplace_back(n, &p);
    return Tensor(n);
}

Tensor Graph::matmul(Tensor a, Tensor b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul inner dimensions differ");
    Node* out = make(a.value() * b.value(), a.node()->needs_grad || b.node()->needs_grad);
    check_finite(out->value, "matmul");
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an).noalias() += out->grad * bn->value.transpose();
        if (bn->needs_grad) grad_buf(bn).noalias() += an->value.transpose() * out->grad;
    };
    return Tensor(out);
}

Tensor Graph::matmul_nt(Tensor a, Tensor b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt inner dimensions differ");
    Node* out = make(a.value() * b.value().transpose(), a.node()->needs_grad || b.node()->needs_grad);
    check_finite(out->value, "matmul_nt");
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an).noalias() += out->grad * bn->value;
        if (bn->needs_grad) grad_buf(bn).noalias() += out->grad.transpose() * an->value;
    };
    return Tensor(out);
}

Tensor Graph::add(Tensor a, Tensor b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("add shape mismatch");
    Node* out = make(a.value() + b.value(), a.node()->needs_grad || b.node()->needs_grad);
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an) += out->grad;
        if (bn->needs_grad) grad_buf(bn) += out->grad;
    };
    return Tensor(out);
}

Tensor Graph::sub(Tensor a, Tensor b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("sub shape mismatch");
    Node* out = make(a.value() - b.value(), a.node()->needs_grad || b.node()->needs_grad);
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an) += out->grad;
        if (bn->needs_grad) grad_buf(bn) -= out->grad;
    };
    return Tensor(out);
}

Tensor Graph::add_rowvec(Tensor a, Tensor b) {
    if (b.rows() != 1 || b.cols() != a.cols()) throw ShapeMismatch("add_rowvec expects 1 x D bias");
    Node* out = make(a.value().rowwise() + b.value().row(0), a.node()->needs_grad || b.node()->needs_grad);
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an) += out->grad;
        if (bn->needs_grad) grad_buf(bn) += out->grad.colwise().sum();
    };
    return Tensor(out);
}

Tensor Graph::scale(Tensor a, double s) {
    Node* out = make(a.value() * s, a.node()->needs_grad);
    check_finite(out->value, "scale");
    Node* an = a.node();
    out->backward = [out, an, s] {
        if (an->needs_grad) grad_buf(an) += out->grad * s;
    };
    return Tensor(out);
}

Tensor Graph::cwise_mul(Tensor a, Tensor b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("cwise_mul shape mismatch");
    Node* out = make(a.value().cwiseProduct(b.value()), a.node()->needs_grad || b.node()->needs_grad);
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an) += out->grad.cwiseProduct(bn->value);
        if (bn->needs_grad) grad_buf(bn) += out->grad.cwiseProduct(an->value);
    };
    return Tensor(out);
}

Tensor Graph::gelu(Tensor a) {
    Mat v = a.value().unaryExpr([](double x) { return gelu_scalar(x); });
    check_finite(v, "gelu");
    Node* out = make(std::move(v), a.node()->needs_grad);
    Node* an = a.node();
    out->backward = [out, an] {
        if (!an->needs_grad) return;
        grad_buf(an) += out->grad.cwiseProduct(
            an->value.unaryExpr([](double x) { return gelu_grad_scalar(x); }));
    };
    return Tensor(out);
}

Tensor Graph::layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps) {
    if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
        beta.cols() != x.cols())
        throw ShapeMismatch("layer_norm affine parameters must be 1 x D");
    const Eigen::Index n = x.rows(), d = x.cols();
    Mat normalized(n, d);
    Vec inv_sigma(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.value().row(i).mean();
        const auto centered = x.value().row(i).array() - mean;
        const double var = centered.square().mean();
        inv_sigma(i) = 1.0 / std::sqrt(var + eps);
        normalized.row(i) = centered * inv_sigma(i);
    }
    Mat v = (normalized.array().rowwise() * gamma.value().row(0).array()).rowwise() +
            beta.value().row(0).array();
    check_finite(v, "layer_norm");
    Node* out = make(std::move(v), x.node()->needs_grad || gamma.node()->needs_grad ||
                                       beta.node()->needs_grad);
    Node *xn = x.node(), *gn = gamma.node(), *bn = beta.node();
    out->backward = [out, xn, gn, bn, normalized, inv_sigma] {
        const Eigen::Index n = normalized.rows(), d = normalized.cols();
        if (gn->needs_grad)
            grad_buf(gn) += out->grad.cwiseProduct(normalized).colwise().sum();
        if (bn->needs_grad) grad_buf(bn) += out->grad.colwise().sum();
        if (xn->needs_grad) {
            Mat& gx = grad_buf(xn);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto dxhat = out->grad.row(i).array() * gn->value.row(0).array();
                const double mean_dxhat = dxhat.mean();
                const double mean_dxhat_xhat = (dxhat * normalized.row(i).array()).mean();
                gx.row(i).array() += inv_sigma(i) * (dxhat - mean_dxhat -
                                                     normalized.row(i).array() * mean_dxhat_xhat);
            }
            (void)d;
        }
    };
    return Tensor(out);
}

Tensor Graph::softmax_rows(Tensor x, const std::vector<std::uint8_t>& key_mask) {
    if (static_cast<Eigen::Index>(key_mask.size()) != x.cols())
        throw ShapeMismatch("softmax key mask length must equal column count");
    bool any = false;
    for (const auto m : key_mask) any = any || (m != 0);
    if (!any) throw ShapeMismatch("softmax over fully masked keys");

    const Eigen::Index n = x.rows(), d = x.cols();
    Mat v(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < d; ++j)
            if (key_mask[j]) mx = std::max(mx, x.value()(i, j));
        double sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double e = key_mask[j] ? std::exp(x.value()(i, j) - mx) : 0.0;
            v(i, j) = e;
            sum += e;
        }
        v.row(i) /= sum;
    }
    check_finite(v, "softmax_rows");
    Node* out = make(std::move(v), x.node()->needs_grad);
    Node* xn = x.node();
    out->backward = [out, xn] {
        if (!xn->needs_grad) return;
        Mat& gx = grad_buf(xn);
        for (Eigen::Index i = 0; i < out->value.rows(); ++i) {
            const double dot = out->grad.row(i).dot(out->value.row(i));
            gx.row(i).array() +=
                (out->grad.row(i).array() - dot) * out->value.row(i).array();
        }
    };
    return Tensor(out);
}

Tensor Graph::slice_cols(Tensor a, Eigen::Index first, Eigen::Index n) {
    if (first < 0 || n < 1 || first + n > a.cols()) throw ShapeMismatch("slice_cols out of range");
    Node* out = make(a.value().middleCols(first, n), a.node()->needs_grad);
    Node* an = a.node();
    out->backward = [out, an, first, n] {
        if (an->needs_grad) grad_buf(an).middleCols(first, n) += out->grad;
    };
    return Tensor(out);
}

Tensor Graph::concat_rows(Tensor a, Tensor b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("concat_rows column mismatch");
    Mat v(a.rows() + b.rows(), a.cols());
    v.topRows(a.rows()) = a.value();
    v.bottomRows(b.rows()) = b.value();
    Node* out = make(std::move(v), a.node()->needs_grad || b.node()->needs_grad);
    Node *an = a.node(), *bn = b.node();
    out->backward = [out, an, bn] {
        if (an->needs_grad) grad_buf(an) += out->grad.topRows(an->value.rows());
        if (bn->needs_grad) grad_buf(bn) += out->grad.bottomRows(bn->value.rows());
    };
    return Tensor(out);
}

Tensor Graph::concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols needs at least one part");
    Eigen::Index cols = 0;
    bool needs = false;
    for (const Tensor& p : parts) {
        if (p.rows() != parts.front().rows()) throw ShapeMismatch("concat_cols row mismatch");
        cols += p.cols();
        needs = needs || p.node()->needs_grad;
    }
    Mat v(parts.front().rows(), cols);
    Eigen::Index at = 0;
    std::vector<std::pair<Node*, Eigen::Index>> layout;
    for (const Tensor& p : parts) {
        v.middleCols(at, p.cols()) = p.value();
        layout.emplace_back(p.node(), at);
        at += p.cols();
    }
    Node* out = make(std::move(v), needs);
    out->backward = [out, layout] {
        for (const auto& [pn, offset] : layout)
            if (pn->needs_grad) grad_buf(pn) += out->grad.middleCols(offset, pn->value.cols());
    };
    return Tensor(out);
}

Tensor Graph::gather_rows(Tensor table, const std::vector<int>& ids) {
    Mat v(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= table.rows()) throw ShapeMismatch("gather_rows id out of range");
        v.row(static_cast<Eigen::Index>(r)) = table.value().row(ids[r]);
    }
    Node* out = make(std::move(v), table.node()->needs_grad);
    Node* tn = table.node();
    out->backward = [out, tn, ids] {
        if (!tn->needs_grad) return;
        Mat& gt = grad_buf(tn);
        for (std::size_t r = 0; r < ids.size(); ++r)
            gt.row(ids[r]) += out->grad.row(static_cast<Eigen::Index>(r));
    };
    return Tensor(out);
}

Tensor Graph::mask_rows(Tensor a, const std::vector<std::uint8_t>& row_mask) {
    if (static_cast<Eigen::Index>(row_mask.size()) != a.rows())
        throw ShapeMismatch("mask_rows mask length mismatch");
    Mat v = a.value();
    for (std::size_t r = 0; r < row_mask.size(); ++r)
        if (!row_mask[r]) v.row(static_cast<Eigen::Index>(r)).setZero();
    Node* out = make(std::move(v), a.node()->needs_grad);
    Node* an = a.node();
    out->backward = [out, an, row_mask] {
        if (!an->needs_grad) return;
        Mat g = out->grad;
        for (std::size_t r = 0; r < row_mask.size(); ++r)
            if (!row_mask[r]) g.row(static_cast<Eigen::Index>(r)).setZero();
        grad_buf(an) += g;
    };
    return Tensor(out);
}

Tensor Graph::weighted_row_sum(Tensor a, const Vec& w) {
    if (w.size() != a.rows()) throw ShapeMismatch("weighted_row_sum weight length mismatch");
    Node* out = make(w.transpose() * a.value(), a.node()->needs_grad);
    Node* an = a.node();
    out->backward = [out, an, w] {
        if (an->needs_grad) grad_buf(an).noalias() += w * out->grad;
    };
    return Tensor(out);
}

Tensor Graph::bce_with_logits(Tensor logits_col, const Vec& targets, const Vec& weights) {
    if (logits_col.cols() != 1 || logits_col.rows() != targets.size() ||
        targets.size() != weights.size())
        throw ShapeMismatch("bce_with_logits expects matching N x 1 shapes");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        const double x = logits_col.value()(i, 0);
        const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        loss += weights(i) * (softplus - targets(i) * x);
    }
    Node* out = make(Mat::Constant(1, 1, loss), logits_col.node()->needs_grad);
    check_finite(out->value, "bce_with_logits");
    Node* ln = logits_col.node();
    out->backward = [out, ln, targets, weights] {
        if (!ln->needs_grad) return;
        const double g = out->grad(0, 0);
        Mat& gl = grad_buf(ln);
        for (Eigen::Index i = 0; i < targets.size(); ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-ln->value(i, 0)));
            gl(i, 0) += g * weights(i) * (sig - targets(i));
        }
    };
    return Tensor(out);
}

Tensor Graph::l1_loss(Tensor pred, const Mat& target, const Mat& weights) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
        target.rows() != weights.rows() || target.cols() != weights.cols())
        throw ShapeMismatch("l1_loss shape mismatch");
    const Mat diff = pred.value() - target;
    const double loss = weights.cwiseProduct(diff.cwiseAbs()).sum();
    Node* out = make(Mat::Constant(1, 1, loss), pred.node()->needs_grad);
    Node* pn = pred.node();
    out->backward = [out, pn, target, weights] {
        if (!pn->needs_grad) return;
        const double g = out->grad(0, 0);
        grad_buf(pn) += g * weights.cwiseProduct(
                                (pn->value - target).unaryExpr([](double d) {
                                    return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                                }));
    };
    return Tensor(out);
}

Tensor Graph::mse_loss(Tensor pred, const Mat& target, const Mat& weights) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
        target.rows() != weights.rows() || target.cols() != weights.cols())
        throw ShapeMismatch("mse_loss shape mismatch");
    const Mat diff = pred.value() - target;
    const double loss = weights.cwiseProduct(diff.cwiseProduct(diff)).sum();
    Node* out = make(Mat::Constant(1, 1, loss), pred.node()->needs_grad);
    Node* pn = pred.node();
    out->backward = [out, pn, target, weights] {
        if (!pn->needs_grad) return;
        const double g = out->grad(0, 0);
        grad_buf(pn) += 2.0 * g * weights.cwiseProduct(pn->value - target);
    };
    return Tensor(out);
}

Tensor Graph::softmax_cross_entropy(Tensor logits_row, int target_index) {
    if (logits_row.rows() != 1) throw ShapeMismatch("softmax_cross_entropy expects a 1 x n row");
    if (target_index < 0 || target_index >= logits_row.cols())
        throw ShapeMismatch("softmax_cross_entropy target out of range");
    const auto& x = logits_row.value();
    const double mx = x.maxCoeff();
    const double lse = mx + std::log((x.array() - mx).exp().sum());
    Node* out = make(Mat::Constant(1, 1, lse - x(0, target_index)), logits_row.node()->needs_grad);
    check_finite(out->value, "softmax_cross_entropy");
    Node* ln = logits_row.node();
    out->backward = [out, ln, target_index, lse] {
        if (!ln->needs_grad) return;
        const double g = out->grad(0, 0);
        Mat soft = (ln->value.array() - lse).exp();
        soft(0, target_index) -= 1.0;
        grad_buf(ln) += g * soft;
    };
    return Tensor(out);
}

void Graph::backward(Tensor loss) {
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeMismatch("backward needs a 1x1 loss");
    grad_buf(loss.node())(0, 0) = 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* n = *it;
        if (n->needs_grad && n->grad_ready && n->backward) n->backward();
    }
    for (auto& [node, param] : bindings_) {
        if (node->grad_ready) param->grad += node->grad;
    }
}

} // namespace situ3d::nn
