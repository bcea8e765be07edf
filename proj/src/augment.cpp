#include "depsev/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace depsev {

namespace {

constexpr std::size_t kTopK = 5;

// Neutral filler vocabulary for the stub predictor.
constexpr std::array<const char*, 32> kFillerPool = {
    "really", "just",      "so",      "very",   "today",   "still",  "now",     "always",
    "never",  "again",     "little",  "much",   "more",    "maybe",  "kind",    "often",
    "feeling", "things",   "people",  "life",   "time",    "day",    "night",   "bad",
    "good",   "hard",      "tired",   "alone",  "down",    "lost",   "heavy",   "quiet"};

void check_mask(const std::vector<std::string>& tokens, std::size_t mask_index) {
    if (mask_index >= tokens.size() || tokens[mask_index] != kMaskToken)
        throw AugmentError("predict: tokens must carry " + std::string(kMaskToken) +
                           " at the mask index");
}

std::uint64_t context_hash(const std::vector<std::string>& tokens, std::size_t mask_index) {
    std::uint64_t h = fnv1a("masked-context");
    for (const auto& t : tokens) h = fnv1a("\x1f", fnv1a(t, h));
    return mix_seed(h, mask_index);
}

/// After the call the first m entries are a uniform draw without replacement.
void partial_shuffle(std::vector<std::size_t>& v, std::size_t m, Rng& rng) {
    for (std::size_t i = 0; i < m && i + 1 < v.size(); ++i)
        std::swap(v[i], v[i + uniform_index(rng, v.size() - i)]);
}

void check_rate(double rate) {
    if (!(rate > 0.0) || rate > 0.3)
        throw ArgumentError("augmentation rate must lie in (0, 0.3]");
}

std::size_t touched_count(double rate, std::size_t n) {
    // Guard keeps an exact product like 0.3 * 10 from rounding up past its
    // mathematical ceiling.
    return static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
}

std::vector<std::size_t> sample_distinct(std::size_t universe, std::size_t m, Rng& rng) {
    std::vector<std::size_t> all(universe);
    std::iota(all.begin(), all.end(), std::size_t{0});
    partial_shuffle(all, m, rng);
    all.resize(m);
    return all;
}

}  // namespace

// ─── Predictors ─────────────────────────────────────────────────────────────

std::vector<std::string> HashMaskedTokenPredictor::predict(
    const std::vector<std::string>& tokens, std::size_t mask_index, std::size_t top_k) const {
    check_mask(tokens, mask_index);
    std::vector<std::string> pool(kFillerPool.begin(), kFillerPool.end());
    Rng rng(context_hash(tokens, mask_index));
    deterministic_shuffle(pool, rng);
    pool.resize(std::min(top_k, pool.size()));
    return pool;
}

EncoderMaskedPredictor::EncoderMaskedPredictor(std::shared_ptr<const TransformerEncoder> encoder,
                                               std::vector<std::string> candidates)
    : encoder_(std::move(encoder)),
      tokenizer_(encoder_ ? encoder_->config().vocab_size : HashTokenizer::kReserved + 1),
      candidates_(std::move(candidates)) {
    if (!encoder_) throw ArgumentError("masked predictor needs an encoder");
    if (candidates_.empty()) throw ArgumentError("masked predictor needs candidate words");
    for (const auto& word : candidates_) {
        if (word == kMaskToken)
            throw ArgumentError("mask token cannot be a prediction candidate");
    }
    std::vector<std::string> sorted = candidates_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ArgumentError("prediction candidates must be distinct");
}

std::vector<std::string> EncoderMaskedPredictor::predict(const std::vector<std::string>& tokens,
                                                         std::size_t mask_index,
                                                         std::size_t top_k) const {
    check_mask(tokens, mask_index);
    const int max_tokens = encoder_->config().max_tokens;
    std::vector<int> ids = {HashTokenizer::kClsId};
    for (const auto& t : tokens) {
        if (static_cast<int>(ids.size()) >= max_tokens) break;
        ids.push_back(tokenizer_.token_id(t));
    }

    Eigen::Index row = static_cast<Eigen::Index>(mask_index) + 1;
    if (row >= static_cast<Eigen::Index>(ids.size())) row = 0;

    Eigen::MatrixXd logits = encoder_->mlm_logits(ids);
    std::vector<std::size_t> order(candidates_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return logits(row, tokenizer_.token_id(candidates_[a])) >
               logits(row, tokenizer_.token_id(candidates_[b]));
    });

    std::vector<std::string> out;
    for (std::size_t i = 0; i < order.size() && out.size() < top_k; ++i)
        out.push_back(candidates_[order[i]]);
    return out;
}

// ─── Operations ─────────────────────────────────────────────────────────────

std::string contextual_insert(const std::string& text, double rate,
                              const MaskedTokenPredictor& predictor, Rng& rng) {
    check_rate(rate);
    const std::vector<std::string> tokens = split_whitespace(text);
    if (tokens.empty()) throw AugmentError("cannot augment empty text");

    const std::size_t m = touched_count(rate, tokens.size());
    std::vector<std::size_t> gaps = sample_distinct(tokens.size() + 1, m, rng);
    std::sort(gaps.rbegin(), gaps.rend());

    std::vector<std::string> out = tokens;
    for (std::size_t g : gaps) {
        std::vector<std::string> context = tokens;
        context.insert(context.begin() + static_cast<std::ptrdiff_t>(g), kMaskToken);
        auto candidates = predictor.predict(context, g, kTopK);
        if (candidates.empty()) continue;
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(g), candidates.front());
    }
    return join_tokens(out);
}

std::string contextual_substitute(const std::string& text, double rate,
                                  const MaskedTokenPredictor& predictor, Rng& rng) {
    check_rate(rate);
    const std::vector<std::string> tokens = split_whitespace(text);
    if (tokens.empty()) throw AugmentError("cannot augment empty text");

    const std::size_t m = touched_count(rate, tokens.size());
    std::vector<std::size_t> positions = sample_distinct(tokens.size(), m, rng);
    std::sort(positions.begin(), positions.end());

    std::vector<std::string> out = tokens;
    for (std::size_t p : positions) {
        std::vector<std::string> context = tokens;
        context[p] = kMaskToken;
        auto candidates = predictor.predict(context, p, kTopK);
        for (const auto& candidate : candidates) {
            if (candidate != tokens[p]) {
                out[p] = candidate;
                break;
            }
        }
    }
    return join_tokens(out);
}

// ─── Corpus-level augmentation ──────────────────────────────────────────────

AugmentationPlan AugmentationPlan::defaults() {
    AugmentationPlan plan;
    plan.counts = {0, 290, 250, 281};
    return plan;
}

void AugmentationPlan::validate(const Corpus& corpus) const {
    if (!(rate > 0.0) || rate > 0.3) throw PlanError("plan rate must lie in (0, 0.3]");
    if (copies < 1) throw PlanError("plan copies must be at least 1");

    std::array<std::size_t, kNumLabels> originals{};
    for (const Post& p : corpus.posts) {
        if (p.origin == Origin::original) ++originals[static_cast<std::size_t>(p.label)];
    }
    for (int c = 0; c < kNumLabels; ++c) {
        const int want = counts[static_cast<std::size_t>(c)];
        if (want < 0) throw PlanError(std::string("plan count for ") + label_name(c) +
                                      " is negative");
        if (static_cast<std::size_t>(want) > originals[static_cast<std::size_t>(c)]) {
            throw PlanError(std::string("plan asks for ") + std::to_string(want) + " " +
                            label_name(c) + " posts but the corpus has " +
                            std::to_string(originals[static_cast<std::size_t>(c)]));
        }
    }
}

std::vector<std::size_t> select_pool(const Corpus& corpus, int label, int count, Rng& rng) {
    if (label < 0 || label >= kNumLabels) throw ArgumentError("select_pool: label out of range");
    if (count < 0) throw ArgumentError("select_pool: negative count");

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
        if (corpus.posts[i].label == label && corpus.posts[i].origin == Origin::original)
            pool.push_back(i);
    }
    if (static_cast<std::size_t>(count) > pool.size())
        throw PlanError("select_pool: not enough original posts of class " +
                        std::string(label_name(label)));

    partial_shuffle(pool, static_cast<std::size_t>(count), rng);
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
}

AugmentResult augment_corpus(const Corpus& corpus, const AugmentationPlan& plan,
                             const MaskedTokenPredictor& predictor) {
    plan.validate(corpus);

    AugmentResult result{corpus, {}};
    for (int c = 0; c < kNumLabels; ++c) {
        const int want = plan.counts[static_cast<std::size_t>(c)];
        if (want == 0) continue;

        Rng pool_rng(mix_seed(plan.seed, static_cast<std::uint64_t>(c)));
        for (std::size_t idx : select_pool(corpus, c, want, pool_rng)) {
            const Post& parent = corpus.posts[idx];
            if (split_whitespace(parent.text).empty()) {
                result.warnings.push_back("post " + parent.id + ": empty text, skipped");
                continue;
            }
            const std::uint64_t parent_seed = mix_seed(plan.seed, fnv1a(parent.id));
            for (int copy = 1; copy <= plan.copies; ++copy) {
                Rng rng(mix_seed(parent_seed, static_cast<std::uint64_t>(copy)));
                const bool insert_op = uniform_index(rng, 2) == 0;
                std::string text = insert_op
                                       ? contextual_insert(parent.text, plan.rate, predictor, rng)
                                       : contextual_substitute(parent.text, plan.rate, predictor,
                                                               rng);
                if (text == parent.text) {
                    result.warnings.push_back("post " + parent.id +
                                              ": augmentation left the text unchanged");
                }
                Post row;
                row.id = parent.id + "_aug" + std::to_string(copy);
                row.text = std::move(text);
                row.label = parent.label;
                row.origin = Origin::augmented;
                row.parent_id = parent.id;
                result.corpus.posts.push_back(std::move(row));
            }
        }
    }
    return result;
}

}  // namespace depsev
