#include "depsev/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace depsev::ad {
namespace {

std::uint64_t next_id() {
    static std::uint64_t counter = 0;
    return counter++;
}

int no_grad_depth = 0;

std::string shape_of(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void accumulate(const Var& target, const Eigen::MatrixXd& g) {
    if (!target->requires_grad) return;
    if (!target->has_grad()) {
        target->grad = Eigen::MatrixXd::Zero(target->value.rows(), target->value.cols());
    }
    target->grad += g;
}

Var make_node(Eigen::MatrixXd value, std::vector<Var> parents,
              std::function<void(const Eigen::MatrixXd&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->id = next_id();
    if (no_grad_depth == 0) {
        for (const auto& p : parents) {
            if (p->requires_grad) {
                node->requires_grad = true;
                break;
            }
        }
    }
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return node;
}

void check_same_shape(const char* op, const Var& a, const Var& b) {
    if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
        throw ArgumentError(std::string(op) + ": shape mismatch " + shape_of(a->value) +
                            " vs " + shape_of(b->value));
    }
}

template <typename F, typename DF>
Var cwise_unary(const Var& a, F f, DF df) {
    Eigen::MatrixXd value = a->value.unaryExpr(f);
    Eigen::MatrixXd input = a->value;
    return make_node(std::move(value), {a}, [a, input, df](const Eigen::MatrixXd& g) {
        accumulate(a, g.cwiseProduct(input.unaryExpr(df)));
    });
}

}  // namespace

Var make_const(Eigen::MatrixXd value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->id = next_id();
    return node;
}

Var make_param(Eigen::MatrixXd value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->id = next_id();
    node->requires_grad = true;
    return node;
}

NoGradScope::NoGradScope() { ++no_grad_depth; }
NoGradScope::~NoGradScope() { --no_grad_depth; }

bool grad_enabled() { return no_grad_depth == 0; }

void clear_grad(const Var& v) { v->grad.resize(0, 0); }

void backward(const Var& root) {
    if (root->value.rows() != 1 || root->value.cols() != 1) {
        throw ArgumentError("backward: root must be 1x1, got " + shape_of(root->value));
    }
    if (!root->requires_grad) {
        throw ArgumentError("backward: graph has no gradient-requiring inputs");
    }

    // Ancestors of the root, visited iteratively; creation ids give a
    // topological order because parents always predate children.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack = {root.get()};
    seen.insert(root.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(),
              [](const Node* x, const Node* y) { return x->id > y->id; });

    root->grad = Eigen::MatrixXd::Ones(1, 1);
    for (Node* n : order) {
        if (n->backward_fn && n->has_grad()) n->backward_fn(n->grad);
    }
}

// ─── Operations ─────────────────────────────────────────────────────────────

Var matmul(const Var& a, const Var& b) {
    if (a->value.cols() != b->value.rows()) {
        throw ArgumentError("matmul: inner dimensions disagree, " + shape_of(a->value) +
                            " * " + shape_of(b->value));
    }
    Eigen::MatrixXd av = a->value;
    Eigen::MatrixXd bv = b->value;
    return make_node(av * bv, {a, b}, [a, b, av, bv](const Eigen::MatrixXd& g) {
        accumulate(a, g * bv.transpose());
        accumulate(b, av.transpose() * g);
    });
}

Var transpose(const Var& a) {
    return make_node(a->value.transpose(), {a},
                     [a](const Eigen::MatrixXd& g) { accumulate(a, g.transpose()); });
}

Var add(const Var& a, const Var& b) {
    check_same_shape("add", a, b);
    return make_node(a->value + b->value, {a, b}, [a, b](const Eigen::MatrixXd& g) {
        accumulate(a, g);
        accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape("sub", a, b);
    return make_node(a->value - b->value, {a, b}, [a, b](const Eigen::MatrixXd& g) {
        accumulate(a, g);
        accumulate(b, -g);
    });
}

Var add_rowvec(const Var& a, const Var& row) {
    if (row->value.rows() != 1 || row->value.cols() != a->value.cols()) {
        throw ArgumentError("add_rowvec: need 1x" + std::to_string(a->value.cols()) +
                            " row, got " + shape_of(row->value));
    }
    Eigen::MatrixXd value = a->value.rowwise() + row->value.row(0);
    return make_node(std::move(value), {a, row}, [a, row](const Eigen::MatrixXd& g) {
        accumulate(a, g);
        accumulate(row, g.colwise().sum());
    });
}

Var cwise_mul(const Var& a, const Var& b) {
    check_same_shape("cwise_mul", a, b);
    Eigen::MatrixXd av = a->value;
    Eigen::MatrixXd bv = b->value;
    return make_node(av.cwiseProduct(bv), {a, b}, [a, b, av, bv](const Eigen::MatrixXd& g) {
        accumulate(a, g.cwiseProduct(bv));
        accumulate(b, g.cwiseProduct(av));
    });
}

Var scale(const Var& a, double s) {
    return make_node(a->value * s, {a},
                     [a, s](const Eigen::MatrixXd& g) { accumulate(a, g * s); });
}

Var relu(const Var& a) {
    return cwise_unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
    return cwise_unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double x) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        });
}

Var tanh(const Var& a) {
    return cwise_unary(
        a, [](double x) { return std::tanh(x); },
        [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        });
}

Var gelu(const Var& a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    return cwise_unary(
        a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
        [](double x) {
            const double phi_cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double phi_pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            return phi_cdf + x * phi_pdf;
        });
}

Var softmax_rows(const Var& a) {
    Eigen::MatrixXd s = a->value;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        Eigen::RowVectorXd shifted = s.row(r).array() - s.row(r).maxCoeff();
        Eigen::RowVectorXd e = shifted.array().exp();
        s.row(r) = e / e.sum();
    }
    return make_node(s, {a}, [a, s](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd dx(s.rows(), s.cols());
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const double dot = g.row(r).cwiseProduct(s.row(r)).sum();
            dx.row(r) = s.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        accumulate(a, dx);
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Eigen::Index n = x->value.rows();
    const Eigen::Index d = x->value.cols();
    if (gamma->value.rows() != 1 || gamma->value.cols() != d ||
        beta->value.rows() != 1 || beta->value.cols() != d) {
        throw ArgumentError("layer_norm_rows: gamma/beta must be 1x" + std::to_string(d));
    }
    Eigen::MatrixXd xhat(n, d);
    Eigen::VectorXd inv_std(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mu = x->value.row(r).mean();
        const double var = (x->value.row(r).array() - mu).square().mean();
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x->value.row(r).array() - mu) * inv_std[r];
    }
    Eigen::MatrixXd value =
        (xhat.array().rowwise() * gamma->value.row(0).array()).rowwise() +
        beta->value.row(0).array();
    return make_node(std::move(value), {x, gamma, beta},
                     [x, gamma, beta, xhat, inv_std](const Eigen::MatrixXd& g) {
                         accumulate(beta, g.colwise().sum());
                         accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                         Eigen::MatrixXd dxhat =
                             g.array().rowwise() * gamma->value.row(0).array();
                         Eigen::MatrixXd dx(g.rows(), g.cols());
                         for (Eigen::Index r = 0; r < g.rows(); ++r) {
                             const double m1 = dxhat.row(r).mean();
                             const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                             dx.row(r) = inv_std[r] *
                                         (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                         }
                         accumulate(x, dx);
                     });
}

Var hcat(const Var& a, const Var& b) {
    if (a->value.rows() != b->value.rows()) {
        throw ArgumentError("hcat: row counts disagree, " + shape_of(a->value) + " vs " +
                            shape_of(b->value));
    }
    Eigen::MatrixXd value(a->value.rows(), a->value.cols() + b->value.cols());
    value << a->value, b->value;
    const Eigen::Index na = a->value.cols();
    const Eigen::Index nb = b->value.cols();
    return make_node(std::move(value), {a, b}, [a, b, na, nb](const Eigen::MatrixXd& g) {
        accumulate(a, g.leftCols(na));
        accumulate(b, g.rightCols(nb));
    });
}

Var vcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ArgumentError("vcat: no parts");
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts.front()->value.cols();
    for (const auto& p : parts) {
        if (p->value.cols() != cols) throw ArgumentError("vcat: column counts disagree");
        rows += p->value.rows();
    }
    Eigen::MatrixXd value(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        value.middleRows(at, p->value.rows()) = p->value;
        at += p->value.rows();
    }
    std::vector<Var> parents = parts;
    return make_node(std::move(value), parents, [parents](const Eigen::MatrixXd& g) {
        Eigen::Index at = 0;
        for (const auto& p : parents) {
            accumulate(p, g.middleRows(at, p->value.rows()));
            at += p->value.rows();
        }
    });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n) {
    if (start < 0 || n <= 0 || start + n > a->value.cols()) {
        throw ArgumentError("slice_cols: range [" + std::to_string(start) + ", " +
                            std::to_string(start + n) + ") outside " + shape_of(a->value));
    }
    const Eigen::Index rows = a->value.rows();
    const Eigen::Index cols = a->value.cols();
    return make_node(a->value.middleCols(start, n), {a},
                     [a, start, n, rows, cols](const Eigen::MatrixXd& g) {
                         Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
                         full.middleCols(start, n) = g;
                         accumulate(a, full);
                     });
}

Var select_row(const Var& a, Eigen::Index row) {
    if (row < 0 || row >= a->value.rows()) {
        throw ArgumentError("select_row: row " + std::to_string(row) + " outside " +
                            shape_of(a->value));
    }
    const Eigen::Index rows = a->value.rows();
    const Eigen::Index cols = a->value.cols();
    return make_node(a->value.row(row), {a}, [a, row, rows, cols](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
        full.row(row) = g;
        accumulate(a, full);
    });
}

Var embed_rows(const Var& table, const std::vector<int>& indices) {
    const Eigen::Index vocab = table->value.rows();
    for (int idx : indices) {
        if (idx < 0 || idx >= vocab) {
            throw ArgumentError("embed_rows: index " + std::to_string(idx) +
                                " outside table with " + std::to_string(vocab) + " rows");
        }
    }
    Eigen::MatrixXd value(static_cast<Eigen::Index>(indices.size()), table->value.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        value.row(static_cast<Eigen::Index>(i)) = table->value.row(indices[i]);
    }
    std::vector<int> idx = indices;
    return make_node(std::move(value), {table}, [table, idx](const Eigen::MatrixXd& g) {
        if (!table->requires_grad) return;
        if (!table->has_grad()) {
            table->grad = Eigen::MatrixXd::Zero(table->value.rows(), table->value.cols());
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            table->grad.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        }
    });
}

Var sum_all(const Var& a) {
    Eigen::MatrixXd value(1, 1);
    value(0, 0) = a->value.sum();
    const Eigen::Index rows = a->value.rows();
    const Eigen::Index cols = a->value.cols();
    return make_node(std::move(value), {a}, [a, rows, cols](const Eigen::MatrixXd& g) {
        accumulate(a, Eigen::MatrixXd::Constant(rows, cols, g(0, 0)));
    });
}

Var mean_all(const Var& a) {
    const double n = static_cast<double>(a->value.size());
    return scale(sum_all(a), 1.0 / n);
}

Var cross_entropy_loss(const Var& logits, const std::vector<int>& labels) {
    const Eigen::Index n = logits->value.rows();
    const Eigen::Index c = logits->value.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ArgumentError("cross_entropy_loss: " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(n) + " rows");
    }
    for (int y : labels) {
        if (y < 0 || y >= c) throw ArgumentError("cross_entropy_loss: label out of range");
    }
    Eigen::MatrixXd probs(n, c);
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double m = logits->value.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits->value.row(r).array() - m).exp();
        const double z = e.sum();
        probs.row(r) = e / z;
        total += m + std::log(z) - logits->value(r, labels[static_cast<std::size_t>(r)]);
    }
    Eigen::MatrixXd value(1, 1);
    value(0, 0) = total / static_cast<double>(n);
    std::vector<int> y = labels;
    return make_node(std::move(value), {logits}, [logits, probs, y](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd d = probs;
        for (Eigen::Index r = 0; r < d.rows(); ++r) {
            d(r, y[static_cast<std::size_t>(r)]) -= 1.0;
        }
        accumulate(logits, d * (g(0, 0) / static_cast<double>(d.rows())));
    });
}

Eigen::MatrixXd make_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout rate must lie in [0,1)");
    Eigen::MatrixXd mask(rows, cols);
    const double keep = 1.0 - rate;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            mask(r, c) = uniform_real(rng) < rate ? 0.0 : 1.0 / keep;
        }
    }
    return mask;
}

Var linear(const Var& x, const Var& w, const Var& b) {
    return add_rowvec(matmul(x, w), b);
}

}  // namespace depsev::ad
