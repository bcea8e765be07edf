#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <vector>

namespace depsev {

// ─── Taxonomies ─────────────────────────────────────────────────────────────

inline constexpr int kNumEmotions = 28;
inline constexpr int kNumSentiments = 3;

inline constexpr std::array<const char*, kNumEmotions> kEmotionLabels = {
    "admiration",    "amusement",  "anger",       "annoyance",
    "approval",      "caring",     "confusion",   "curiosity",
    "desire",        "disappointment", "disapproval", "disgust",
    "embarrassment", "excitement", "fear",        "gratitude",
    "grief",         "joy",        "love",        "nervousness",
    "optimism",      "pride",      "realization", "relief",
    "remorse",       "sadness",    "surprise",    "neutral"};

inline constexpr std::array<const char*, kNumSentiments> kSentimentLabels = {
    "negative", "neutral", "positive"};

// ─── Scorers ────────────────────────────────────────────────────────────────
//
// A scorer maps text to a probability distribution over its label set.
// Adapters are selected by spec string: "stub" gives a deterministic
// hash-based scorer, a file path gives a lexicon-table scorer.

class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual const std::vector<std::string>& labels() const = 0;
    virtual std::string name() const = 0;
    /// Probability vector over labels(); entries nonnegative, sum 1.
    virtual Eigen::VectorXd score(const std::string& text) const = 0;
};

std::unique_ptr<Scorer> make_emotion_scorer(const std::string& spec);
std::unique_ptr<Scorer> make_sentiment_scorer(const std::string& spec);

// ─── Medication lexicon ─────────────────────────────────────────────────────

class MedicationLexicon {
  public:
    /// One lowercase name per line; blank lines and #-comments ignored.
    static MedicationLexicon load(const std::string& path);
    static MedicationLexicon from_names(std::vector<std::string> names);

    bool contains(const std::string& token) const;
    /// Whole-token matches over whitespace tokenization.
    std::size_t count_mentions(const std::string& text) const;
    std::vector<std::string> find_medications(const std::vector<std::string>& tokens) const;
    std::size_t size() const { return names_.size(); }

  private:
    std::vector<std::string> names_;
};

// ─── Feature assembly ───────────────────────────────────────────────────────

enum class FeaturePreset {
    emotion28_sent3,      // 28 emotion probs + 3 sentiment probs
    emotion28_sent3_med,  // + medication-mention feature min(count,5)/5
};

FeaturePreset parse_feature_preset(const std::string& name);
const char* feature_preset_name(FeaturePreset preset);

int feature_dim(FeaturePreset preset);
std::vector<std::string> feature_names(FeaturePreset preset);

Eigen::VectorXd build_feature_vector(const std::string& text, const Scorer& emotion,
                                     const Scorer& sentiment, const MedicationLexicon& lexicon,
                                     FeaturePreset preset);

/// Row i holds the feature vector of texts[i].
Eigen::MatrixXd compute_feature_matrix(const std::vector<std::string>& texts,
                                       const Scorer& emotion, const Scorer& sentiment,
                                       const MedicationLexicon& lexicon, FeaturePreset preset);

// ─── Cache ──────────────────────────────────────────────────────────────────
//
// Feature CSV (id + one column per feature, 17 significant digits) plus a
// .meta.json sidecar recording schema, preset and the configuration hash it
// was computed under. Loading with a different configuration must fail
// loudly rather than silently reuse stale features.

struct FeatureCacheMeta {
    std::vector<std::string> schema;
    std::string preset;
    std::string config_hash;

    bool operator==(const FeatureCacheMeta&) const = default;
};

struct FeatureCache {
    std::vector<std::string> ids;
    Eigen::MatrixXd features;
    FeatureCacheMeta meta;
};

void save_feature_cache(const std::string& path, const std::vector<std::string>& ids,
                        const Eigen::MatrixXd& features, const FeatureCacheMeta& meta);

FeatureCache load_feature_cache(const std::string& path, const FeatureCacheMeta& expected);

}  // namespace depsev
