#pragma once

#include <map>
#include <string>
#include <vector>

#include "depsev/autodiff.hpp"

namespace depsev {

// ─── Configuration ──────────────────────────────────────────────────────────

struct EncoderConfig {
    int vocab_size = 64;
    int hidden_dim = 8;
    int num_layers = 2;
    int num_heads = 2;
    int ffn_dim = 16;
    int max_tokens = 32;
    std::string name = "toy";

    void validate() const;

    static EncoderConfig toy();
    /// "toy", "distilbert-base-uncased" or "bert-base-uncased".
    static EncoderConfig preset(const std::string& name);
};

// ─── Tokenizer ──────────────────────────────────────────────────────────────
//
// Whitespace tokens hashed into a fixed vocabulary. Id 0 is the leading
// [CLS] position, id 1 the mask placeholder; word ids start at 2.

/// Spelled-out mask placeholder; the tokenizer maps it to kMaskId.
inline constexpr const char* kMaskToken = "[mask]";

class HashTokenizer {
  public:
    static constexpr int kClsId = 0;
    static constexpr int kMaskId = 1;
    static constexpr int kReserved = 2;

    explicit HashTokenizer(int vocab_size);

    int token_id(const std::string& token) const;
    /// [CLS] followed by token ids, truncated to max_tokens total.
    std::vector<int> encode(const std::string& text, int max_tokens) const;

  private:
    int vocab_size_;
};

// ─── Encoder ────────────────────────────────────────────────────────────────
//
// Post-norm transformer stack: word + position embeddings through a layer
// norm, then per layer x = LN1(x + MHA(x)), x = LN2(x + FFN(x)) with a GELU
// feed-forward. One sequence per forward pass; row 0 carries the [CLS]
// state of every layer.

class TransformerEncoder {
  public:
    explicit TransformerEncoder(EncoderConfig config, std::uint64_t seed = 0);

    const EncoderConfig& config() const { return config_; }

    struct Forward {
        ad::Var states;                   // final layer, tokens x hidden
        std::vector<ad::Var> cls_layers;  // 1 x hidden per layer, input order
    };
    Forward forward(const std::vector<int>& token_ids) const;

    /// CLS states of the last k layers stacked oldest-first into k x hidden;
    /// no gradients flow.
    Eigen::MatrixXd cls_stack(const std::vector<int>& token_ids, int k) const;

    /// Tied-embedding token logits (tokens x vocab) for masked prediction;
    /// no gradients flow.
    Eigen::MatrixXd mlm_logits(const std::vector<int>& token_ids) const;

    std::size_t param_count() const;
    std::size_t trainable_param_count() const;

    /// Excludes every encoder weight from later graphs. Not reversible.
    void freeze();
    bool frozen() const { return frozen_; }

    const std::vector<std::pair<std::string, ad::Var>>& named_parameters() const {
        return params_;
    }

    /// Replaces weights by tensor name; every name must resolve and shapes
    /// must match.
    void load_weights(const std::map<std::string, Eigen::MatrixXd>& tensors);

  private:
    struct Layer {
        ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
        ad::Var ln1_g, ln1_b;
        ad::Var w1, b1, w2, b2;
        ad::Var ln2_g, ln2_b;
    };

    ad::Var layer_forward(const Layer& layer, const ad::Var& x) const;

    EncoderConfig config_;
    ad::Var word_emb_, pos_emb_, emb_ln_g_, emb_ln_b_;
    std::vector<Layer> layers_;
    std::vector<std::pair<std::string, ad::Var>> params_;
    bool frozen_ = false;
};

/// Parameter count implied by a configuration, without allocating.
std::size_t encoder_param_count(const EncoderConfig& config);

}  // namespace depsev
