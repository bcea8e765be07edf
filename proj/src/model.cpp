#include "depsev/model.hpp"

#include <cmath>

namespace depsev {

// ─── Configuration ──────────────────────────────────────────────────────────

HeadKind parse_head_kind(const std::string& token) {
    if (token == "mlp") return HeadKind::mlp;
    if (token == "lstm") return HeadKind::lstm;
    if (token == "mm_gate") return HeadKind::mm_gate;
    if (token == "mm_xatt") return HeadKind::mm_xatt;
    throw ConfigError("unknown head kind: " + token);
}

const char* head_kind_name(HeadKind kind) {
    switch (kind) {
        case HeadKind::mlp: return "mlp";
        case HeadKind::lstm: return "lstm";
        case HeadKind::mm_gate: return "mm_gate";
        case HeadKind::mm_xatt: return "mm_xatt";
    }
    return "mlp";
}

void ModelConfig::validate() const {
    encoder.validate();
    if (cls_layers < 1 || cls_layers > encoder.num_layers)
        throw ConfigError("cls_layers must lie in [1, " + std::to_string(encoder.num_layers) +
                          "], got " + std::to_string(cls_layers));
    if (head_hidden < 1) throw ConfigError("head_hidden must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::reference() {
    ModelConfig c;
    c.encoder = EncoderConfig::preset("distilbert-base-uncased");
    c.cls_layers = 4;
    return c;
}

std::size_t head_param_count(const ModelConfig& config) {
    const std::size_t d = static_cast<std::size_t>(config.encoder.hidden_dim);
    const std::size_t f = static_cast<std::size_t>(feature_dim(config.features));
    const std::size_t h = static_cast<std::size_t>(config.head_hidden);
    const std::size_t c = static_cast<std::size_t>(kNumLabels);
    const std::size_t stack_from = [&] {
        switch (config.head) {
            case HeadKind::mlp: return d + f;
            default: return d;
        }
    }();
    const std::size_t mlp_stack = stack_from * h + h + h * c + c;
    switch (config.head) {
        case HeadKind::mlp: return mlp_stack;
        case HeadKind::lstm:
            return (d + f) * 4 * h + h * 4 * h + 4 * h + h * c + c;
        case HeadKind::mm_gate:
            return (d + f) * d + d + f * d + d + mlp_stack;
        case HeadKind::mm_xatt:
            return 2 * (f * d) + mlp_stack;
    }
    return 0;
}

std::size_t classifier_param_count(const ModelConfig& config) {
    return encoder_param_count(config.encoder) + static_cast<std::size_t>(config.cls_layers) +
           head_param_count(config);
}

// ─── Classifier ─────────────────────────────────────────────────────────────

namespace {

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = (2.0 * uniform_real(rng) - 1.0) * limit;
    return m;
}

}  // namespace

Classifier::Classifier(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      encoder_(config_.encoder, mix_seed(seed, fnv1a("encoder"))),
      dropout_rng_(mix_seed(seed, fnv1a("dropout"))) {
    config_.validate();
    if (config_.freeze_encoder) encoder_.freeze();

    for (const auto& [name, v] : encoder_.named_parameters())
        params_.emplace_back("encoder." + name, v);

    auto track = [this](const std::string& name, Eigen::MatrixXd value) {
        ad::Var v = ad::make_param(std::move(value));
        params_.emplace_back(name, v);
        return v;
    };

    Rng rng(mix_seed(seed, fnv1a("head")));
    const Eigen::Index d = config_.encoder.hidden_dim;
    const Eigen::Index f = feature_dim(config_.features);
    const Eigen::Index h = config_.head_hidden;
    const Eigen::Index c = kNumLabels;
    const int k = config_.cls_layers;

    alpha_ = track("alpha", Eigen::MatrixXd::Constant(1, k, 1.0 / k));

    switch (config_.head) {
        case HeadKind::mlp:
            head_.w1 = track("head.w1", glorot(d + f, h, rng));
            head_.b1 = track("head.b1", Eigen::MatrixXd::Zero(1, h));
            head_.w2 = track("head.w2", glorot(h, c, rng));
            head_.b2 = track("head.b2", Eigen::MatrixXd::Zero(1, c));
            break;
        case HeadKind::lstm:
            head_.lstm_w = track("head.lstm.w", glorot(d + f, 4 * h, rng));
            head_.lstm_u = track("head.lstm.u", glorot(h, 4 * h, rng));
            head_.lstm_b = track("head.lstm.b", Eigen::MatrixXd::Zero(1, 4 * h));
            head_.out_w = track("head.out.w", glorot(h, c, rng));
            head_.out_b = track("head.out.b", Eigen::MatrixXd::Zero(1, c));
            break;
        case HeadKind::mm_gate:
            head_.gate_w = track("head.gate.w", glorot(d + f, d, rng));
            head_.gate_b = track("head.gate.b", Eigen::MatrixXd::Zero(1, d));
            head_.proj_w = track("head.proj.w", glorot(f, d, rng));
            head_.proj_b = track("head.proj.b", Eigen::MatrixXd::Zero(1, d));
            head_.w1 = track("head.w1", glorot(d, h, rng));
            head_.b1 = track("head.b1", Eigen::MatrixXd::Zero(1, h));
            head_.w2 = track("head.w2", glorot(h, c, rng));
            head_.b2 = track("head.b2", Eigen::MatrixXd::Zero(1, c));
            break;
        case HeadKind::mm_xatt:
            head_.keys = track("head.keys", glorot(f, d, rng));
            head_.values = track("head.values", glorot(f, d, rng));
            head_.w1 = track("head.w1", glorot(d, h, rng));
            head_.b1 = track("head.b1", Eigen::MatrixXd::Zero(1, h));
            head_.w2 = track("head.w2", glorot(h, c, rng));
            head_.b2 = track("head.b2", Eigen::MatrixXd::Zero(1, c));
            break;
    }
}

ad::Var Classifier::layer_stack(const std::vector<int>& token_ids) {
    const int k = config_.cls_layers;
    if (encoder_.frozen()) return ad::make_const(encoder_.cls_stack(token_ids, k));
    auto fwd = encoder_.forward(token_ids);
    std::vector<ad::Var> rows(fwd.cls_layers.end() - k, fwd.cls_layers.end());
    return ad::vcat(rows);
}

ad::Var Classifier::apply_dropout(const ad::Var& x, bool training) {
    if (!training || config_.dropout <= 0.0) return x;
    Eigen::MatrixXd mask =
        ad::make_dropout_mask(x->value.rows(), x->value.cols(), config_.dropout, dropout_rng_);
    return ad::cwise_mul(x, ad::make_const(std::move(mask)));
}

ad::Var Classifier::mlp_stack(const ad::Var& fused) {
    return ad::linear(ad::relu(ad::linear(fused, head_.w1, head_.b1)), head_.w2, head_.b2);
}

ad::Var Classifier::head_forward(const ad::Var& stack, const ad::Var& feat, bool training) {
    switch (config_.head) {
        case HeadKind::mlp: {
            ad::Var pooled = ad::matmul(alpha_, stack);
            return mlp_stack(apply_dropout(ad::hcat(pooled, feat), training));
        }
        case HeadKind::mm_gate: {
            ad::Var pooled = ad::matmul(alpha_, stack);
            ad::Var gate =
                ad::sigmoid(ad::linear(ad::hcat(pooled, feat), head_.gate_w, head_.gate_b));
            ad::Var projected = ad::linear(feat, head_.proj_w, head_.proj_b);
            ad::Var fused = ad::add(pooled, ad::cwise_mul(gate, projected));
            return mlp_stack(apply_dropout(fused, training));
        }
        case HeadKind::mm_xatt: {
            ad::Var pooled = ad::matmul(alpha_, stack);
            // Feature magnitudes scale the value rows; keys stay unscaled so
            // relevance is learned.
            Eigen::MatrixXd diag = feat->value.row(0).asDiagonal();
            ad::Var scaled = ad::matmul(ad::make_const(std::move(diag)), head_.values);
            const double inv = 1.0 / std::sqrt(static_cast<double>(config_.encoder.hidden_dim));
            ad::Var scores = ad::scale(ad::matmul(pooled, ad::transpose(head_.keys)), inv);
            ad::Var fused = ad::add(pooled, ad::matmul(ad::softmax_rows(scores), scaled));
            return mlp_stack(apply_dropout(fused, training));
        }
        case HeadKind::lstm: {
            const Eigen::Index h = config_.head_hidden;
            ad::Var state_h = ad::make_const(Eigen::MatrixXd::Zero(1, h));
            ad::Var state_c = ad::make_const(Eigen::MatrixXd::Zero(1, h));
            for (int i = 0; i < config_.cls_layers; ++i) {
                ad::Var x = apply_dropout(ad::hcat(ad::select_row(stack, i), feat), training);
                ad::Var z = ad::add(
                    ad::add(ad::matmul(x, head_.lstm_w), ad::matmul(state_h, head_.lstm_u)),
                    head_.lstm_b);
                ad::Var gi = ad::sigmoid(ad::slice_cols(z, 0, h));
                ad::Var gf = ad::sigmoid(ad::slice_cols(z, h, h));
                ad::Var gg = ad::tanh(ad::slice_cols(z, 2 * h, h));
                ad::Var go = ad::sigmoid(ad::slice_cols(z, 3 * h, h));
                state_c = ad::add(ad::cwise_mul(gf, state_c), ad::cwise_mul(gi, gg));
                state_h = ad::cwise_mul(go, ad::tanh(state_c));
            }
            return ad::linear(state_h, head_.out_w, head_.out_b);
        }
    }
    throw ArgumentError("unhandled head kind");
}

ad::Var Classifier::forward(const std::vector<int>& token_ids, const Eigen::VectorXd& features,
                            bool training) {
    if (features.size() != feature_dim(config_.features)) {
        throw ArgumentError("forward: expected " + std::to_string(feature_dim(config_.features)) +
                            " features, got " + std::to_string(features.size()));
    }
    ad::Var stack = layer_stack(token_ids);
    ad::Var feat = ad::make_const(features.transpose());
    return head_forward(stack, feat, training);
}

ad::Var Classifier::loss(const std::vector<int>& token_ids, const Eigen::VectorXd& features,
                         int label, bool training) {
    if (label < 0 || label >= kNumLabels) throw ArgumentError("loss: label out of range");
    return ad::cross_entropy_loss(forward(token_ids, features, training), {label});
}

int Classifier::predict(const std::vector<int>& token_ids, const Eigen::VectorXd& features) {
    ad::NoGradScope guard;
    Eigen::VectorXd proba = predict_proba(token_ids, features);
    Eigen::Index best = 0;
    proba.maxCoeff(&best);
    return static_cast<int>(best);
}

Eigen::VectorXd Classifier::predict_proba(const std::vector<int>& token_ids,
                                          const Eigen::VectorXd& features) {
    ad::NoGradScope guard;
    Eigen::RowVectorXd logits = forward(token_ids, features, false)->value.row(0);
    Eigen::RowVectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
    return (shifted / shifted.sum()).transpose();
}

std::size_t Classifier::count_parameters() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_) n += static_cast<std::size_t>(v->value.size());
    return n;
}

std::size_t Classifier::count_trainable() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_) {
        if (v->requires_grad) n += static_cast<std::size_t>(v->value.size());
    }
    return n;
}

std::vector<std::pair<std::string, ad::Var>> Classifier::trainable_parameters() const {
    std::vector<std::pair<std::string, ad::Var>> out;
    for (const auto& [name, v] : params_) {
        if (v->requires_grad) out.emplace_back(name, v);
    }
    return out;
}

void Classifier::load_weights(const std::map<std::string, Eigen::MatrixXd>& tensors) {
    if (tensors.size() != params_.size()) {
        throw InferenceError("model weights: expected " + std::to_string(params_.size()) +
                             " tensors, got " + std::to_string(tensors.size()));
    }
    for (auto& [name, v] : params_) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw InferenceError("model weights: missing tensor " + name);
        if (it->second.rows() != v->value.rows() || it->second.cols() != v->value.cols()) {
            throw InferenceError("model weights: tensor " + name + " has shape " +
                                 std::to_string(it->second.rows()) + "x" +
                                 std::to_string(it->second.cols()) + ", expected " +
                                 std::to_string(v->value.rows()) + "x" +
                                 std::to_string(v->value.cols()));
        }
        v->value = it->second;
    }
}

}  // namespace depsev
