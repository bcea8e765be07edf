#include "depsev/encoder.hpp"

#include <cmath>

namespace depsev {

// ─── Configuration ──────────────────────────────────────────────────────────

void EncoderConfig::validate() const {
    if (vocab_size <= HashTokenizer::kReserved)
        throw ConfigError("encoder vocab_size must exceed the reserved ids");
    if (hidden_dim <= 0 || num_layers <= 0 || num_heads <= 0 || ffn_dim <= 0 || max_tokens <= 0)
        throw ConfigError("encoder dimensions must be positive");
    if (hidden_dim % num_heads != 0)
        throw ConfigError("hidden_dim " + std::to_string(hidden_dim) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
}

EncoderConfig EncoderConfig::toy() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::preset(const std::string& name) {
    if (name == "toy") return toy();
    if (name == "distilbert-base-uncased") {
        EncoderConfig c;
        c.vocab_size = 30522;
        c.hidden_dim = 768;
        c.num_layers = 6;
        c.num_heads = 12;
        c.ffn_dim = 3072;
        c.max_tokens = 512;
        c.name = name;
        return c;
    }
    if (name == "bert-base-uncased") {
        EncoderConfig c = preset("distilbert-base-uncased");
        c.num_layers = 12;
        c.name = name;
        return c;
    }
    throw ConfigError("unknown encoder preset: " + name);
}

std::size_t encoder_param_count(const EncoderConfig& c) {
    const std::size_t d = static_cast<std::size_t>(c.hidden_dim);
    const std::size_t f = static_cast<std::size_t>(c.ffn_dim);
    const std::size_t embeddings = static_cast<std::size_t>(c.vocab_size) * d +
                                   static_cast<std::size_t>(c.max_tokens) * d + 2 * d;
    const std::size_t attention = 4 * (d * d + d);
    const std::size_t ffn = (d * f + f) + (f * d + d);
    const std::size_t per_layer = attention + 2 * d + ffn + 2 * d;
    return embeddings + static_cast<std::size_t>(c.num_layers) * per_layer;
}

// ─── Tokenizer ──────────────────────────────────────────────────────────────

HashTokenizer::HashTokenizer(int vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size <= kReserved)
        throw ConfigError("tokenizer vocab_size must exceed the reserved ids");
}

int HashTokenizer::token_id(const std::string& token) const {
    if (token == kMaskToken) return kMaskId;
    const auto span = static_cast<std::uint64_t>(vocab_size_ - kReserved);
    return kReserved + static_cast<int>(fnv1a(token) % span);
}

std::vector<int> HashTokenizer::encode(const std::string& text, int max_tokens) const {
    if (max_tokens < 1) throw ArgumentError("encode: max_tokens must be at least 1");
    std::vector<int> ids = {kClsId};
    for (const auto& token : split_whitespace(text)) {
        if (static_cast<int>(ids.size()) >= max_tokens) break;
        ids.push_back(token_id(token));
    }
    return ids;
}

// ─── Encoder ────────────────────────────────────────────────────────────────

namespace {

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = (2.0 * uniform_real(rng) - 1.0) * limit;
    return m;
}

Eigen::MatrixXd embedding_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = (2.0 * uniform_real(rng) - 1.0) * 0.05;
    return m;
}

}  // namespace

TransformerEncoder::TransformerEncoder(EncoderConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
    config_.validate();
    Rng rng(seed);
    const Eigen::Index d = config_.hidden_dim;
    const Eigen::Index f = config_.ffn_dim;

    auto track = [this](const std::string& name, Eigen::MatrixXd value) {
        ad::Var v = ad::make_param(std::move(value));
        params_.emplace_back(name, v);
        return v;
    };

    word_emb_ = track("embeddings.word", embedding_init(config_.vocab_size, d, rng));
    pos_emb_ = track("embeddings.position", embedding_init(config_.max_tokens, d, rng));
    emb_ln_g_ = track("embeddings.ln.gamma", Eigen::MatrixXd::Ones(1, d));
    emb_ln_b_ = track("embeddings.ln.beta", Eigen::MatrixXd::Zero(1, d));

    for (int l = 0; l < config_.num_layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        Layer layer;
        layer.wq = track(prefix + "attn.wq", glorot(d, d, rng));
        layer.bq = track(prefix + "attn.bq", Eigen::MatrixXd::Zero(1, d));
        layer.wk = track(prefix + "attn.wk", glorot(d, d, rng));
        layer.bk = track(prefix + "attn.bk", Eigen::MatrixXd::Zero(1, d));
        layer.wv = track(prefix + "attn.wv", glorot(d, d, rng));
        layer.bv = track(prefix + "attn.bv", Eigen::MatrixXd::Zero(1, d));
        layer.wo = track(prefix + "attn.wo", glorot(d, d, rng));
        layer.bo = track(prefix + "attn.bo", Eigen::MatrixXd::Zero(1, d));
        layer.ln1_g = track(prefix + "ln1.gamma", Eigen::MatrixXd::Ones(1, d));
        layer.ln1_b = track(prefix + "ln1.beta", Eigen::MatrixXd::Zero(1, d));
        layer.w1 = track(prefix + "ffn.w1", glorot(d, f, rng));
        layer.b1 = track(prefix + "ffn.b1", Eigen::MatrixXd::Zero(1, f));
        layer.w2 = track(prefix + "ffn.w2", glorot(f, d, rng));
        layer.b2 = track(prefix + "ffn.b2", Eigen::MatrixXd::Zero(1, d));
        layer.ln2_g = track(prefix + "ln2.gamma", Eigen::MatrixXd::Ones(1, d));
        layer.ln2_b = track(prefix + "ln2.beta", Eigen::MatrixXd::Zero(1, d));
        layers_.push_back(std::move(layer));
    }
}

ad::Var TransformerEncoder::layer_forward(const Layer& layer, const ad::Var& x) const {
    const int heads = config_.num_heads;
    const Eigen::Index dh = config_.hidden_dim / heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    ad::Var q = ad::linear(x, layer.wq, layer.bq);
    ad::Var k = ad::linear(x, layer.wk, layer.bk);
    ad::Var v = ad::linear(x, layer.wv, layer.bv);

    ad::Var concat;
    for (int h = 0; h < heads; ++h) {
        ad::Var qh = ad::slice_cols(q, h * dh, dh);
        ad::Var kh = ad::slice_cols(k, h * dh, dh);
        ad::Var vh = ad::slice_cols(v, h * dh, dh);
        ad::Var attn = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt_dh));
        ad::Var head = ad::matmul(attn, vh);
        concat = h == 0 ? head : ad::hcat(concat, head);
    }

    ad::Var attended = ad::linear(concat, layer.wo, layer.bo);
    ad::Var x1 = ad::layer_norm_rows(ad::add(x, attended), layer.ln1_g, layer.ln1_b);
    ad::Var hidden = ad::gelu(ad::linear(x1, layer.w1, layer.b1));
    ad::Var ffn = ad::linear(hidden, layer.w2, layer.b2);
    return ad::layer_norm_rows(ad::add(x1, ffn), layer.ln2_g, layer.ln2_b);
}

TransformerEncoder::Forward TransformerEncoder::forward(const std::vector<int>& token_ids) const {
    if (token_ids.empty()) throw EncodeError("encoder forward: empty token sequence");
    if (static_cast<int>(token_ids.size()) > config_.max_tokens) {
        throw EncodeError("encoder forward: " + std::to_string(token_ids.size()) +
                          " tokens exceed max_tokens " + std::to_string(config_.max_tokens));
    }
    for (int id : token_ids) {
        if (id < 0 || id >= config_.vocab_size)
            throw EncodeError("encoder forward: token id " + std::to_string(id) +
                              " outside vocabulary");
    }

    std::vector<int> positions(token_ids.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

    ad::Var x = ad::add(ad::embed_rows(word_emb_, token_ids), ad::embed_rows(pos_emb_, positions));
    x = ad::layer_norm_rows(x, emb_ln_g_, emb_ln_b_);

    Forward out;
    for (const Layer& layer : layers_) {
        x = layer_forward(layer, x);
        out.cls_layers.push_back(ad::select_row(x, 0));
    }
    out.states = x;
    return out;
}

Eigen::MatrixXd TransformerEncoder::cls_stack(const std::vector<int>& token_ids, int k) const {
    if (k < 1 || k > config_.num_layers) {
        throw ArgumentError("cls_stack: k must lie in [1, " + std::to_string(config_.num_layers) +
                            "], got " + std::to_string(k));
    }
    ad::NoGradScope guard;
    Forward fwd = forward(token_ids);
    Eigen::MatrixXd stack(k, config_.hidden_dim);
    const int first = config_.num_layers - k;
    for (int i = 0; i < k; ++i) {
        stack.row(i) = fwd.cls_layers[static_cast<std::size_t>(first + i)]->value.row(0);
    }
    return stack;
}

Eigen::MatrixXd TransformerEncoder::mlm_logits(const std::vector<int>& token_ids) const {
    ad::NoGradScope guard;
    Forward fwd = forward(token_ids);
    return fwd.states->value * word_emb_->value.transpose();
}

std::size_t TransformerEncoder::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_) n += static_cast<std::size_t>(v->value.size());
    return n;
}

std::size_t TransformerEncoder::trainable_param_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_) {
        if (v->requires_grad) n += static_cast<std::size_t>(v->value.size());
    }
    return n;
}

void TransformerEncoder::freeze() {
    for (auto& [name, v] : params_) {
        v->requires_grad = false;
        ad::clear_grad(v);
    }
    frozen_ = true;
}

void TransformerEncoder::load_weights(const std::map<std::string, Eigen::MatrixXd>& tensors) {
    if (tensors.size() != params_.size()) {
        throw InferenceError("encoder weights: expected " + std::to_string(params_.size()) +
                             " tensors, got " + std::to_string(tensors.size()));
    }
    for (auto& [name, v] : params_) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw InferenceError("encoder weights: missing tensor " + name);
        if (it->second.rows() != v->value.rows() || it->second.cols() != v->value.cols()) {
            throw InferenceError("encoder weights: tensor " + name + " has shape " +
                                 std::to_string(it->second.rows()) + "x" +
                                 std::to_string(it->second.cols()) + ", expected " +
                                 std::to_string(v->value.rows()) + "x" +
                                 std::to_string(v->value.cols()));
        }
        v->value = it->second;
    }
}

}  // namespace depsev
