#include "finerfact/autodiff.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <unordered_set>

namespace finerfact::ad {

namespace {

NodePtr make_node(Matrix value, std::vector<NodePtr> parents,
                  std::function<void(const Matrix&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return n;
}

void accum(const NodePtr& p, const Matrix& g) {
    if (p->requires_grad) p->accumulate(g);
}

}  // namespace

Tensor Tensor::leaf(Matrix value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m), requires_grad);
}

const Matrix& Tensor::grad() const {
    static const Matrix empty;
    if (!node_ || !node_->grad_allocated) return empty;
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) {
        node_->grad_allocated = false;
        node_->grad.resize(0, 0);
    }
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw NumericError("Tensor::item: not a scalar");
    return node_->value(0, 0);
}

void backward(const Tensor& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw NumericError("backward: loss must be scalar");
    }
    // post-order DFS -> children processed before parents when reversed
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next].get();
            ++next;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.node()->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_allocated) n->backward_fn(n->grad);
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    NodePtr an = a.node(), bn = b.node();
    return Tensor(make_node(an->value * bn->value, {an, bn}, [an, bn](const Matrix& g) {
        accum(an, g * bn->value.transpose());
        accum(bn, an->value.transpose() * g);
    }));
}

Tensor transpose(const Tensor& a) {
    NodePtr an = a.node();
    return Tensor(make_node(an->value.transpose(), {an},
                            [an](const Matrix& g) { accum(an, g.transpose()); }));
}

Tensor add(const Tensor& a, const Tensor& b) {
    NodePtr an = a.node(), bn = b.node();
    const auto &av = an->value, &bv = bn->value;
    Matrix out;
    enum class Mode { Same, Scalar, Row } mode;
    if (bv.rows() == av.rows() && bv.cols() == av.cols()) {
        mode = Mode::Same;
        out = av + bv;
    } else if (bv.rows() == 1 && bv.cols() == 1) {
        mode = Mode::Scalar;
        out = av.array() + bv(0, 0);
    } else if (bv.rows() == 1 && bv.cols() == av.cols()) {
        mode = Mode::Row;
        out = av.rowwise() + bv.row(0);
    } else {
        throw NumericError("add: incompatible shapes");
    }
    return Tensor(make_node(std::move(out), {an, bn}, [an, bn, mode](const Matrix& g) {
        accum(an, g);
        switch (mode) {
            case Mode::Same:
                accum(bn, g);
                break;
            case Mode::Scalar: {
                Matrix s(1, 1);
                s(0, 0) = g.sum();
                accum(bn, s);
                break;
            }
            case Mode::Row:
                accum(bn, g.colwise().sum());
                break;
        }
    }));
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

Tensor neg(const Tensor& a) {
    NodePtr an = a.node();
    return Tensor(make_node(-an->value, {an}, [an](const Matrix& g) { accum(an, -g); }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    NodePtr an = a.node(), bn = b.node();
    const auto &av = an->value, &bv = bn->value;
    if (bv.rows() == 1 && bv.cols() == 1) {
        Matrix out = av * bv(0, 0);
        return Tensor(make_node(std::move(out), {an, bn}, [an, bn](const Matrix& g) {
            accum(an, g * bn->value(0, 0));
            Matrix s(1, 1);
            s(0, 0) = (g.array() * an->value.array()).sum();
            accum(bn, s);
        }));
    }
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
        throw NumericError("mul: incompatible shapes");
    }
    Matrix out = av.cwiseProduct(bv);
    return Tensor(make_node(std::move(out), {an, bn}, [an, bn](const Matrix& g) {
        accum(an, g.cwiseProduct(bn->value));
        accum(bn, g.cwiseProduct(an->value));
    }));
}

Tensor scale(const Tensor& a, double s) {
    NodePtr an = a.node();
    return Tensor(
        make_node(an->value * s, {an}, [an, s](const Matrix& g) { accum(an, g * s); }));
}

Tensor add_scalar(const Tensor& a, double s) {
    NodePtr an = a.node();
    return Tensor(make_node(an->value.array() + s, {an},
                            [an](const Matrix& g) { accum(an, g); }));
}

Tensor sigmoid(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out = (1.0 / (1.0 + (-an->value.array()).exp())).matrix();
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an}, [an, saved](const Matrix& g) {
        accum(an, (g.array() * saved.array() * (1.0 - saved.array())).matrix());
    }));
}

Tensor tanh_t(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out = an->value.array().tanh().matrix();
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an}, [an, saved](const Matrix& g) {
        accum(an, (g.array() * (1.0 - saved.array().square())).matrix());
    }));
}

Tensor softplus(const Tensor& a) {
    NodePtr an = a.node();
    // stable: softplus(x) = max(x, 0) + log1p(exp(-|x|))
    Matrix out = an->value.unaryExpr(
        [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
    return Tensor(make_node(std::move(out), {an}, [an](const Matrix& g) {
        Matrix sig = (1.0 / (1.0 + (-an->value.array()).exp())).matrix();
        accum(an, g.cwiseProduct(sig));
    }));
}

Tensor exp_t(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out = an->value.array().exp().matrix();
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an}, [an, saved](const Matrix& g) {
        accum(an, g.cwiseProduct(saved));
    }));
}

Tensor log_t(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out = an->value.array().log().matrix();
    return Tensor(make_node(std::move(out), {an}, [an](const Matrix& g) {
        accum(an, g.cwiseQuotient(an->value));
    }));
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    NodePtr an = a.node();
    Matrix out = an->value.unaryExpr([lo, hi](double x) { return std::clamp(x, lo, hi); });
    return Tensor(make_node(std::move(out), {an}, [an, lo, hi](const Matrix& g) {
        Matrix masked = g;
        for (Eigen::Index i = 0; i < masked.rows(); ++i) {
            for (Eigen::Index j = 0; j < masked.cols(); ++j) {
                double x = an->value(i, j);
                if (x < lo || x > hi) masked(i, j) = 0.0;
            }
        }
        accum(an, masked);
    }));
}

Tensor sum_all(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out(1, 1);
    out(0, 0) = an->value.sum();
    return Tensor(make_node(std::move(out), {an}, [an](const Matrix& g) {
        accum(an, Matrix::Constant(an->value.rows(), an->value.cols(), g(0, 0)));
    }));
}

Tensor sum_squares(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out(1, 1);
    out(0, 0) = an->value.squaredNorm();
    return Tensor(make_node(std::move(out), {an}, [an](const Matrix& g) {
        accum(an, 2.0 * g(0, 0) * an->value);
    }));
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
    NodePtr an = a.node();
    Matrix out = an->value.middleRows(start, count);
    return Tensor(make_node(std::move(out), {an}, [an, start, count](const Matrix& g) {
        Matrix full = Matrix::Zero(an->value.rows(), an->value.cols());
        full.middleRows(start, count) = g;
        accum(an, full);
    }));
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& ids) {
    NodePtr an = a.node();
    Matrix out(static_cast<Eigen::Index>(ids.size()), an->value.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = an->value.row(ids[i]);
    }
    return Tensor(make_node(std::move(out), {an}, [an, ids](const Matrix& g) {
        Matrix full = Matrix::Zero(an->value.rows(), an->value.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            full.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
        }
        accum(an, full);
    }));
}

Tensor vstack(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw NumericError("vstack: empty input");
    const Eigen::Index cols = rows[0].cols();
    Eigen::Index total = 0;
    std::vector<NodePtr> parents;
    for (const auto& r : rows) {
        total += r.rows();
        parents.push_back(r.node());
    }
    Matrix out(total, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (const auto& r : rows) {
        offsets.push_back(at);
        out.middleRows(at, r.rows()) = r.value();
        at += r.rows();
    }
    auto parents_copy = parents;
    return Tensor(make_node(std::move(out), std::move(parents),
                            [parents_copy, offsets](const Matrix& g) {
                                for (std::size_t i = 0; i < parents_copy.size(); ++i) {
                                    accum(parents_copy[i],
                                          g.middleRows(offsets[i],
                                                       parents_copy[i]->value.rows()));
                                }
                            }));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw NumericError("concat_cols: empty input");
    const Eigen::Index rows = parts[0].rows();
    Eigen::Index total = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        total += p.cols();
        parents.push_back(p.node());
    }
    Matrix out(rows, total);
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        offsets.push_back(at);
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    auto parents_copy = parents;
    return Tensor(make_node(std::move(out), std::move(parents),
                            [parents_copy, offsets](const Matrix& g) {
                                for (std::size_t i = 0; i < parents_copy.size(); ++i) {
                                    accum(parents_copy[i],
                                          g.middleCols(offsets[i],
                                                       parents_copy[i]->value.cols()));
                                }
                            }));
}

Tensor softmax_rows(const Tensor& a) {
    NodePtr an = a.node();
    Matrix out = an->value;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        double mx = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - mx).exp();
        out.row(r) /= out.row(r).sum();
    }
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an}, [an, saved](const Matrix& g) {
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            double dot = g.row(r).dot(saved.row(r));
            dx.row(r) = saved.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        accum(an, dx);
    }));
}

Tensor masked_softmax(const Tensor& v, const Mask& mask) {
    NodePtr an = v.node();
    if (an->value.cols() != 1) throw NumericError("masked_softmax: expects a column vector");
    const auto n = an->value.rows();
    if (static_cast<Eigen::Index>(mask.size()) != n) {
        throw NumericError("masked_softmax: mask size mismatch");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mask[static_cast<std::size_t>(i)] && an->value(i, 0) > mx) mx = an->value(i, 0);
    }
    Matrix out = Matrix::Zero(n, 1);
    if (std::isfinite(mx)) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (mask[static_cast<std::size_t>(i)]) {
                out(i, 0) = std::exp(an->value(i, 0) - mx);
                total += out(i, 0);
            }
        }
        out /= total;
    }
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an}, [an, saved, mask](const Matrix& g) {
        double dot = 0.0;
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) dot += g(i, 0) * saved(i, 0);
        }
        Matrix dx = Matrix::Zero(g.rows(), 1);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) {
                dx(i, 0) = saved(i, 0) * (g(i, 0) - dot);
            }
        }
        accum(an, dx);
    }));
}

Tensor masked_mean_rows(const Tensor& a, const Mask& mask) {
    NodePtr an = a.node();
    const auto rows = an->value.rows();
    if (static_cast<Eigen::Index>(mask.size()) != rows) {
        throw NumericError("masked_mean_rows: mask size mismatch");
    }
    int count = 0;
    Matrix out = Matrix::Zero(1, an->value.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (mask[static_cast<std::size_t>(i)]) {
            out += an->value.row(i);
            ++count;
        }
    }
    if (count > 0) out /= static_cast<double>(count);
    return Tensor(make_node(std::move(out), {an}, [an, mask, count](const Matrix& g) {
        if (count == 0) return;
        Matrix full = Matrix::Zero(an->value.rows(), an->value.cols());
        for (Eigen::Index i = 0; i < an->value.rows(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) {
                full.row(i) = g.row(0) / static_cast<double>(count);
            }
        }
        accum(an, full);
    }));
}

Tensor masked_max_rows(const Tensor& a, const Mask& mask) {
    NodePtr an = a.node();
    const auto rows = an->value.rows();
    const auto cols = an->value.cols();
    if (static_cast<Eigen::Index>(mask.size()) != rows) {
        throw NumericError("masked_max_rows: mask size mismatch");
    }
    Matrix out = Matrix::Zero(1, cols);
    std::vector<Eigen::Index> argmax(static_cast<std::size_t>(cols), -1);
    for (Eigen::Index c = 0; c < cols; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (mask[static_cast<std::size_t>(r)] && an->value(r, c) > best) {
                best = an->value(r, c);
                argmax[static_cast<std::size_t>(c)] = r;
            }
        }
        if (argmax[static_cast<std::size_t>(c)] >= 0) out(0, c) = best;
    }
    return Tensor(make_node(std::move(out), {an}, [an, argmax](const Matrix& g) {
        Matrix full = Matrix::Zero(an->value.rows(), an->value.cols());
        for (Eigen::Index c = 0; c < an->value.cols(); ++c) {
            if (argmax[static_cast<std::size_t>(c)] >= 0) {
                full(argmax[static_cast<std::size_t>(c)], c) += g(0, c);
            }
        }
        accum(an, full);
    }));
}

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
    NodePtr an = a.node(), bn = b.node();
    const auto& av = an->value;
    const auto& bv = bn->value;
    if (av.cols() != bv.cols()) throw NumericError("cosine_matrix: dim mismatch");
    Eigen::VectorXd na = av.rowwise().norm();
    Eigen::VectorXd nb = bv.rowwise().norm();
    Matrix out = av * bv.transpose();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            double d = na(i) * nb(j);
            out(i, j) = d > 0.0 ? out(i, j) / d : 0.0;
        }
    }
    Matrix saved = out;
    return Tensor(make_node(std::move(out), {an, bn}, [an, bn, saved, na, nb](const Matrix& g) {
        const auto& av = an->value;
        const auto& bv = bn->value;
        Matrix da = Matrix::Zero(av.rows(), av.cols());
        Matrix db = Matrix::Zero(bv.rows(), bv.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            if (na(i) == 0.0) continue;
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                if (nb(j) == 0.0 || g(i, j) == 0.0) continue;
                const double inv = 1.0 / (na(i) * nb(j));
                const double lij = saved(i, j);
                da.row(i) += g(i, j) * (bv.row(j) * inv - av.row(i) * (lij / (na(i) * na(i))));
                db.row(j) += g(i, j) * (av.row(i) * inv - bv.row(j) * (lij / (nb(j) * nb(j))));
            }
        }
        accum(an, da);
        accum(bn, db);
    }));
}

Tensor kernel_features(const Tensor& translation, const std::vector<double>& mu,
                       const std::vector<double>& sigma, const Mask& col_mask) {
    NodePtr an = translation.node();
    const auto& L = an->value;
    const auto rows = L.rows();
    const auto cols = L.cols();
    const auto K = static_cast<Eigen::Index>(mu.size());
    if (static_cast<Eigen::Index>(col_mask.size()) != cols) {
        throw NumericError("kernel_features: mask size mismatch");
    }
    constexpr double kSumFloor = 1e-10;  // KNRM-style underflow guard
    bool any_valid = false;
    for (int m : col_mask) any_valid |= (m != 0);

    Matrix sums = Matrix::Zero(rows, K);
    Matrix out(rows, K);
    if (!any_valid) {
        out.setConstant(std::log(DBL_MIN));
    } else {
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index k = 0; k < K; ++k) {
                double s = 0.0;
                const double m = mu[static_cast<std::size_t>(k)];
                const double inv2s2 =
                    1.0 / (2.0 * sigma[static_cast<std::size_t>(k)] * sigma[static_cast<std::size_t>(k)]);
                for (Eigen::Index j = 0; j < cols; ++j) {
                    if (!col_mask[static_cast<std::size_t>(j)]) continue;
                    const double d = L(i, j) - m;
                    s += std::exp(-d * d * inv2s2);
                }
                sums(i, k) = s;
                out(i, k) = std::log(std::max(s, kSumFloor));
            }
        }
    }
    NodePtr res = make_node(std::move(out), {an}, nullptr);
    if (res->requires_grad && any_valid) {
        res->backward_fn = [an, mu, sigma, col_mask, sums](const Matrix& g) {
            const auto& L = an->value;
            Matrix dl = Matrix::Zero(L.rows(), L.cols());
            for (Eigen::Index i = 0; i < L.rows(); ++i) {
                for (Eigen::Index k = 0; k < g.cols(); ++k) {
                    if (g(i, k) == 0.0 || sums(i, k) <= kSumFloor) continue;
                    const double m = mu[static_cast<std::size_t>(k)];
                    const double s2 = sigma[static_cast<std::size_t>(k)] *
                                      sigma[static_cast<std::size_t>(k)];
                    const double coeff = g(i, k) / sums(i, k);
                    for (Eigen::Index j = 0; j < L.cols(); ++j) {
                        if (!col_mask[static_cast<std::size_t>(j)]) continue;
                        const double d = L(i, j) - m;
                        dl(i, j) += coeff * std::exp(-d * d / (2.0 * s2)) * (-d / s2);
                    }
                }
            }
            accum(an, dl);
        };
    }
    return Tensor(res);
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
    NodePtr an = a.node(), gn = gain.node(), bn = bias.node();
    const auto& x = an->value;
    const auto rows = x.rows();
    const auto cols = x.cols();
    Matrix xhat(rows, cols);
    Eigen::VectorXd inv_std(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x.row(r).array() - mean) * inv_std(r);
    }
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        out.row(r) = xhat.row(r).cwiseProduct(gn->value.row(0)) + bn->value.row(0);
    }
    return Tensor(make_node(
        std::move(out), {an, gn, bn}, [an, gn, bn, xhat, inv_std](const Matrix& g) {
            const auto rows = g.rows();
            const auto cols = g.cols();
            Matrix dx(rows, cols);
            Matrix dxhat(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                dxhat.row(r) = g.row(r).cwiseProduct(gn->value.row(0));
            }
            const double n = static_cast<double>(cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const double sum_d = dxhat.row(r).sum();
                const double sum_dx = dxhat.row(r).dot(xhat.row(r));
                dx.row(r) = inv_std(r) * (dxhat.row(r).array() - sum_d / n -
                                          xhat.row(r).array() * (sum_dx / n))
                                             .matrix();
            }
            accum(an, dx);
            accum(gn, (g.array() * xhat.array()).colwise().sum().matrix());
            accum(bn, g.colwise().sum());
        }));
}

Tensor ParameterStore::create(const std::string& name, Eigen::Index rows,
                              Eigen::Index cols, double init_scale, Rng& rng) {
    std::normal_distribution<double> dist(0.0, init_scale);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    }
    Tensor t = Tensor::leaf(std::move(m), true);
    order_.push_back(name);
    tensors_.emplace(name, t);
    return t;
}

Tensor ParameterStore::create_zeros(const std::string& name, Eigen::Index rows,
                                    Eigen::Index cols) {
    Tensor t = Tensor::leaf(Matrix::Zero(rows, cols), true);
    order_.push_back(name);
    tensors_.emplace(name, t);
    return t;
}

Tensor ParameterStore::create_constant(const std::string& name, Eigen::Index rows,
                                       Eigen::Index cols, double value) {
    Tensor t = Tensor::leaf(Matrix::Constant(rows, cols, value), true);
    order_.push_back(name);
    tensors_.emplace(name, t);
    return t;
}

Tensor& ParameterStore::get(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("unknown parameter group: " + name);
    return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("unknown parameter group: " + name);
    return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
    return tensors_.count(name) > 0;
}

std::vector<std::string> ParameterStore::names() const { return order_; }

void ParameterStore::zero_grads() {
    for (auto& name : order_) tensors_.at(name).zero_grad();
}

std::size_t ParameterStore::total_parameters() const {
    std::size_t n = 0;
    for (const auto& name : order_) {
        const Tensor& t = tensors_.at(name);
        n += static_cast<std::size_t>(t.rows() * t.cols());
    }
    return n;
}

void Adam::step(ParameterStore& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.for_each([&](const std::string& name, Tensor& p) {
        if (!p.has_grad()) return;
        const Matrix& g = p.grad();
        auto [mit, m_new] = m_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
        auto [vit, v_new] = v_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
        Matrix& m = mit->second;
        Matrix& v = vit->second;
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        Matrix mhat = m / bc1;
        Matrix vhat = v / bc2;
        p.mutable_value() -=
            lr_ * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps_).matrix());
    });
}

}  // namespace finerfact::ad
