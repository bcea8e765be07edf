#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "depsev/common.hpp"

namespace depsev::ad {

// Reverse-mode autodiff over dense double matrices. A graph is a DAG of
// shared_ptr nodes; children hold their parents, so a graph dies when the
// last external reference to its head goes away while long-lived parameter
// nodes survive across steps. Gradients are allocated lazily on first
// accumulation.

struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Eigen::MatrixXd&)> backward_fn;

    bool has_grad() const { return grad.size() > 0; }
};

using Var = std::shared_ptr<Node>;

Var make_const(Eigen::MatrixXd value);
Var make_param(Eigen::MatrixXd value);

/// While alive, newly built nodes record no parents or backward closures,
/// so pure inference costs neither tape memory nor captures.
class NoGradScope {
  public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;
};

bool grad_enabled();

/// Drops an accumulated gradient; parameters keep their values.
void clear_grad(const Var& v);

/// Reverse pass from a 1x1 root; accumulates into every reachable
/// grad-requiring node. Throws ArgumentError if the root is not scalar or
/// nothing in the graph requires gradients.
void backward(const Var& root);

// ─── Operations ─────────────────────────────────────────────────────────────

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds a 1xC row vector to every row of a.
Var add_rowvec(const Var& a, const Var& row);
Var cwise_mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
/// Exact gaussian form, 0.5 x (1 + erf(x / sqrt 2)).
Var gelu(const Var& a);

Var softmax_rows(const Var& a);
/// Per-row layer norm with learned 1xC gain and bias.
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-12);

Var hcat(const Var& a, const Var& b);
Var vcat(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n);
Var select_row(const Var& a, Eigen::Index row);
/// Gathers table rows by index; the backward pass scatter-adds.
Var embed_rows(const Var& table, const std::vector<int>& indices);

Var sum_all(const Var& a);
Var mean_all(const Var& a);

/// Mean cross-entropy of row logits against integer labels, fused with a
/// numerically stable log-softmax.
Var cross_entropy_loss(const Var& logits, const std::vector<int>& labels);

/// Inverted-dropout mask: entries are 0 with probability rate, else
/// 1/(1-rate). Multiply with cwise_mul against a same-shaped activation.
Eigen::MatrixXd make_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

// ─── Conveniences ───────────────────────────────────────────────────────────

/// x W + b with x NxI, W IxO, b 1xO.
Var linear(const Var& x, const Var& w, const Var& b);

}  // namespace depsev::ad
