#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "finerfact/common.hpp"

namespace finerfact::ad {

using Matrix = Eigen::MatrixXd;
using Mask = std::vector<int>;  // 1 = valid, 0 = excluded

// Node of the dynamically built computation graph. Graphs are rebuilt per
// forward pass; parameter nodes persist across passes.
struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Matrix&)> backward_fn;  // pushes grads to parents

    void accumulate(const Matrix& g) {
        if (!grad_allocated) {
            grad = Matrix::Zero(value.rows(), value.cols());
            grad_allocated = true;
        }
        grad += g;
    }
};

using NodePtr = std::shared_ptr<Node>;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr n) : node_(std::move(n)) {}

    static Tensor leaf(Matrix value, bool requires_grad = true);
    static Tensor constant(Matrix value) { return leaf(std::move(value), false); }
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    const Matrix& grad() const;
    bool has_grad() const { return node_ && node_->grad_allocated; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void zero_grad();
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    double item() const;

    const NodePtr& node() const { return node_; }

private:
    NodePtr node_;
};

// Reverse-mode sweep from a scalar; accumulates into .grad of every node
// reachable through requires_grad parents.
void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// b may match a, be 1x1, or be a 1xN row broadcast over a's rows
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise; b may be 1x1
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor sum_all(const Tensor& a);      // 1x1
Tensor sum_squares(const Tensor& a);  // 1x1
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor gather_rows(const Tensor& a, const std::vector<int>& ids);
Tensor vstack(const std::vector<Tensor>& rows);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Row-wise softmax over the full matrix (encoder attention).
Tensor softmax_rows(const Tensor& a);
// Softmax over the valid entries of a column vector; invalid entries get 0.
Tensor masked_softmax(const Tensor& v, const Mask& mask);
// Mean over valid rows -> 1 x cols (zero row if no valid rows).
Tensor masked_mean_rows(const Tensor& a, const Mask& mask);
// Max over valid rows -> 1 x cols (zero row if no valid rows).
Tensor masked_max_rows(const Tensor& a, const Mask& mask);

// Pairwise cosine of the rows of a against the rows of b; zero rows give 0.
Tensor cosine_matrix(const Tensor& a, const Tensor& b);

// Gaussian kernel match features over each row of a translation matrix:
// psi[i][k] = log(max(sum_j valid exp(-(l_ij - mu_k)^2 / (2 sigma_k^2)), floor)).
// Rows with no valid column get log(DBL_MIN) in every kernel.
Tensor kernel_features(const Tensor& translation, const std::vector<double>& mu,
                       const std::vector<double>& sigma, const Mask& col_mask);

// Row-wise layer normalization with learnable gain/bias (1 x cols each).
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Named parameter groups with deterministic ordering; owns the leaf tensors.
class ParameterStore {
public:
    Tensor create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                  double init_scale, Rng& rng);
    Tensor create_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    Tensor create_constant(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                           double value);

    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<std::string> names() const;
    std::size_t size() const { return order_.size(); }
    void zero_grads();
    std::size_t total_parameters() const;

    template <typename Fn>
    void for_each(Fn&& fn) {
        for (auto& name : order_) fn(name, tensors_.at(name));
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& name : order_) fn(name, tensors_.at(name));
    }

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> tensors_;
};

class Adam {
public:
    Adam(double lr = 5e-5, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParameterStore& params);
    void reset() {
        m_.clear();
        v_.clear();
        t_ = 0;
    }
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::unordered_map<std::string, Matrix> m_;
    std::unordered_map<std::string, Matrix> v_;
};

}  // namespace finerfact::ad
