#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "situ3d/errors.hpp"
#include "situ3d/rng.hpp"

namespace situ3d::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named trainable tensor with persistent gradient and optimizer moments.
struct Param {
    std::string name;
    Mat value;
    Mat grad;
    Mat m1, m2; // AdamW moments
    bool no_decay = false;

    Eigen::Index size() const { return value.size(); }
};

// Owns parameters in creation order; names are unique and iteration is
// deterministic.
class ParameterSet {
public:
    Param& create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                  bool no_decay = false);
    // Uniform fan-in init, the default for weight matrices.
    Param& create_fan_in(const std::string& name, Eigen::Index rows, Eigen::Index cols, Rng& rng,
                         bool no_decay = false);

    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::size_t count() const { return params_.size(); }
    Eigen::Index total_size() const;
    void zero_grads();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::deque<Param> params_;
    std::vector<std::pair<std::string, std::size_t>> index_;
};

struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    bool grad_ready = false;
    std::function<void()> backward; // accumulates into parent grads
};

// Handle into a Graph-owned node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Node* n) : node_(n) {}

    const Mat& value() const { return node_->value; }
    const Mat& grad() const { return node_->grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    double item() const;
    bool valid() const { return node_ != nullptr; }
    Node* node() const { return node_; }

private:
    Node* node_ = nullptr;
};

// Dynamic tape over a fixed op vocabulary. Nodes are created in topological
// order; backward walks the tape in reverse. One Graph per forward pass.
class Graph {
public:
    Tensor constant(Mat v);
    Tensor leaf(Mat v, bool needs_grad);
    // Leaf bound to a Param; backward() adds its gradient into param.grad.
    Tensor param(Param& p);

    Tensor matmul(Tensor a, Tensor b);
    // a * b^T without materializing the transpose
    Tensor matmul_nt(Tensor a, Tensor b);
    Tensor add(Tensor a, Tensor b);
    Tensor sub(Tensor a, Tensor b);
    Tensor add_rowvec(Tensor a, Tensor b); // b is 1 x D, broadcast over rows
    Tensor scale(Tensor a, double s);
    Tensor cwise_mul(Tensor a, Tensor b);
    Tensor gelu(Tensor a);
    Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps = 1e-5);
    // Softmax over each row of x; masked key columns get weight exactly 0.
    // Every row must keep at least one unmasked column.
    Tensor softmax_rows(Tensor x, const std::vector<std::uint8_t>& key_mask);
    Tensor slice_cols(Tensor a, Eigen::Index first, Eigen::Index n);
    Tensor concat_rows(Tensor a, Tensor b);
    Tensor concat_cols(const std::vector<Tensor>& parts);
    Tensor gather_rows(Tensor table, const std::vector<int>& ids);
    Tensor mask_rows(Tensor a, const std::vector<std::uint8_t>& row_mask);
    // w^T a with a constant weight column; yields 1 x D
    Tensor weighted_row_sum(Tensor a, const Vec& w);

    // Scalar losses (1x1 tensors). Targets and weights are constants.
    Tensor bce_with_logits(Tensor logits_col, const Vec& targets, const Vec& weights);
    Tensor l1_loss(Tensor pred, const Mat& target, const Mat& weights);
    Tensor mse_loss(Tensor pred, const Mat& target, const Mat& weights);
    Tensor softmax_cross_entropy(Tensor logits_row, int target_index);

    /// Reverse-mode sweep from a 1x1 loss; flushes bound Param gradients.
    void backward(Tensor loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    Node* make(Mat value, bool needs_grad);
    static Mat& grad_buf(Node* n);
    static void check_finite(const Mat& m, const char* op);

    std::deque<Node> nodes_;
    std::vector<Node*> order_;
    std::vector<std::pair<Node*, Param*>> bindings_;
};

} // namespace situ3d::nn
