#pragma once

#include <map>
#include <string>
#include <vector>

#include "depsev/autodiff.hpp"
#include "depsev/corpus.hpp"
#include "depsev/encoder.hpp"
#include "depsev/features.hpp"

namespace depsev {

// ─── Layer aggregation ──────────────────────────────────────────────────────

/// Weighted pooling of row-stacked layer states: weights is 1 x k, states is
/// k x d, the result is the 1 x d combination sum_i w_i states_i.
template <typename DerivedW, typename DerivedS>
auto aggregate_layers(const Eigen::MatrixBase<DerivedW>& weights,
                      const Eigen::MatrixBase<DerivedS>& states) {
    return weights * states;
}

// ─── Configuration ──────────────────────────────────────────────────────────

enum class HeadKind { mlp, lstm, mm_gate, mm_xatt };

HeadKind parse_head_kind(const std::string& token);
const char* head_kind_name(HeadKind kind);

struct ModelConfig {
    EncoderConfig encoder;
    /// CLS states pooled from this many final encoder layers.
    int cls_layers = 2;
    FeaturePreset features = FeaturePreset::emotion28_sent3;
    HeadKind head = HeadKind::mlp;
    int head_hidden = 512;
    double dropout = 0.1;
    bool freeze_encoder = true;

    void validate() const;

    static ModelConfig toy();
    /// Full-scale reference setup: distilbert encoder, last four layers,
    /// emotion and sentiment features into the mlp head.
    static ModelConfig reference();
};

/// Parameters of the classification head alone, by closed form.
std::size_t head_param_count(const ModelConfig& config);

/// Encoder, pooling weights and head together, by closed form.
std::size_t classifier_param_count(const ModelConfig& config);

// ─── Classifier ─────────────────────────────────────────────────────────────
//
// Token ids run through the encoder; the last cls_layers [CLS] states are
// stacked and pooled with a learned weight per layer, auxiliary features are
// fused in and a head maps the result to class logits. The recurrent head
// consumes the stack stepwise instead of pooling; its pooling weights exist
// but stay out of the graph.

class Classifier {
  public:
    explicit Classifier(ModelConfig config, std::uint64_t seed = 0);

    const ModelConfig& config() const { return config_; }
    const TransformerEncoder& encoder() const { return encoder_; }

    /// Class logits (1 x 4). Training mode applies inverted dropout to the
    /// fused vector; evaluation is deterministic.
    ad::Var forward(const std::vector<int>& token_ids, const Eigen::VectorXd& features,
                    bool training = false);

    /// Mean cross-entropy of one sample.
    ad::Var loss(const std::vector<int>& token_ids, const Eigen::VectorXd& features, int label,
                 bool training = false);

    int predict(const std::vector<int>& token_ids, const Eigen::VectorXd& features);
    Eigen::VectorXd predict_proba(const std::vector<int>& token_ids,
                                  const Eigen::VectorXd& features);

    std::size_t count_parameters() const;
    std::size_t count_trainable() const;

    /// Encoder tensors prefixed "encoder.", pooling weights as "alpha",
    /// head tensors prefixed "head.".
    const std::vector<std::pair<std::string, ad::Var>>& named_parameters() const {
        return params_;
    }
    std::vector<std::pair<std::string, ad::Var>> trainable_parameters() const;

    /// Replaces weights by name; the tensor set must match exactly.
    void load_weights(const std::map<std::string, Eigen::MatrixXd>& tensors);

  private:
    struct HeadParams {
        ad::Var w1, b1, w2, b2;
        ad::Var gate_w, gate_b, proj_w, proj_b;
        ad::Var keys, values;
        ad::Var lstm_w, lstm_u, lstm_b, out_w, out_b;
    };

    ad::Var layer_stack(const std::vector<int>& token_ids);
    ad::Var apply_dropout(const ad::Var& x, bool training);
    ad::Var mlp_stack(const ad::Var& fused);
    ad::Var head_forward(const ad::Var& stack, const ad::Var& feat, bool training);

    ModelConfig config_;
    TransformerEncoder encoder_;
    ad::Var alpha_;
    HeadParams head_;
    std::vector<std::pair<std::string, ad::Var>> params_;
    Rng dropout_rng_;
};

}  // namespace depsev
