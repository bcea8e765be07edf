#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace depsev {

// ─── Labels ─────────────────────────────────────────────────────────────────

inline constexpr int kNumLabels = 4;

/// Fixed class order everywhere: minimum, mild, moderate, severe.
inline constexpr std::array<const char*, kNumLabels> kLabelNames = {
    "minimum", "mild", "moderate", "severe"};

/// Accepts class names (case-insensitive) or integers 0-3.
std::optional<int> parse_label(const std::string& token);

const char* label_name(int label);

// ─── Post / Corpus ──────────────────────────────────────────────────────────

enum class Origin { original, augmented };

struct Post {
    std::string id;
    std::string text;
    int label = 0;
    Origin origin = Origin::original;
    std::optional<std::string> parent_id;
};

struct Corpus {
    std::vector<Post> posts;
    std::string schema_version = "1";

    std::size_t size() const { return posts.size(); }
    bool empty() const { return posts.empty(); }
};

struct LabelDistribution {
    std::map<int, std::size_t> counts;
    std::map<int, double> fractions;
    std::size_t total = 0;
};

// ─── Operations ─────────────────────────────────────────────────────────────

enum class CorpusFormat { csv };

/// Loads a labeled dataset. The input needs columns text,label (RFC-4180,
/// header row); id/origin/parent_id columns are honored when present so
/// canonical files round-trip. Missing ids become row indices.
Corpus load_dataset(const std::string& path, CorpusFormat format = CorpusFormat::csv);

Corpus load_dataset_stream(std::istream& in, const std::string& source_name);

/// Canonical serialization: id,text,label,origin,parent_id.
void save_corpus(const Corpus& corpus, const std::string& path);

void save_corpus_stream(const Corpus& corpus, std::ostream& out);

LabelDistribution label_distribution(const Corpus& corpus);

struct SplitOptions {
    bool stratified = true;
};

struct Split {
    Corpus train;
    Corpus test;
};

/// Disjoint, exhaustive partition, stratified by label (per-class train
/// counts within +-1 of class_count*fraction), deterministic per seed.
Split split(const Corpus& corpus, double train_fraction, std::uint64_t seed,
            const SplitOptions& options = {});

/// Structural validation of the Post/Corpus invariants; throws on violation.
void validate_corpus(const Corpus& corpus);

/// Content hash over posts (ids, texts, labels); used for cache keys.
std::uint64_t corpus_hash(const Corpus& corpus);

}  // namespace depsev
