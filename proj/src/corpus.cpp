#include "depsev/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "depsev/common.hpp"
#include "depsev/csv.hpp"

namespace depsev {

std::optional<int> parse_label(const std::string& token) {
    const std::string t = to_lower_ascii(trim(token));
    for (int i = 0; i < kNumLabels; ++i) {
        if (t == kLabelNames[i]) return i;
    }
    if (t.size() == 1 && t[0] >= '0' && t[0] <= '3') return t[0] - '0';
    return std::nullopt;
}

const char* label_name(int label) {
    if (label < 0 || label >= kNumLabels) throw ArgumentError("label out of range");
    return kLabelNames[static_cast<std::size_t>(label)];
}

namespace {

int find_column(const csv::Row& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (to_lower_ascii(trim(header[i])) == name) return static_cast<int>(i);
    }
    return -1;
}

std::string origin_name(Origin o) {
    return o == Origin::original ? "original" : "augmented";
}

}  // namespace

Corpus load_dataset_stream(std::istream& in, const std::string& source_name) {
    const auto rows = csv::read(in);
    if (rows.empty()) throw EmptyCorpusError("empty corpus: " + source_name + " has no rows");

    const csv::Row& header = rows.front();
    const int text_col = find_column(header, "text");
    const int label_col = find_column(header, "label");
    if (text_col < 0 || label_col < 0) {
        throw SchemaError("schema error: " + source_name + " must have columns text,label (found: " +
                          join_tokens(header) + ")");
    }
    const int id_col = find_column(header, "id");
    const int origin_col = find_column(header, "origin");
    const int parent_col = find_column(header, "parent_id");

    Corpus corpus;
    std::vector<std::string> bad_rows;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const csv::Row& row = rows[r];
        if (row.size() == 1 && trim(row[0]).empty()) continue;  // stray blank line
        const int max_col = std::max({text_col, label_col, id_col, origin_col, parent_col});
        if (static_cast<int>(row.size()) <= max_col) {
            bad_rows.push_back("row " + std::to_string(r + 1) + ": expected " +
                               std::to_string(header.size()) + " columns, got " +
                               std::to_string(row.size()));
            continue;
        }

        Post post;
        post.text = row[static_cast<std::size_t>(text_col)];
        if (trim(post.text).empty()) {
            bad_rows.push_back("row " + std::to_string(r + 1) + ": empty text");
            continue;
        }
        const auto label = parse_label(row[static_cast<std::size_t>(label_col)]);
        if (!label) {
            bad_rows.push_back("row " + std::to_string(r + 1) + ": unknown label \"" +
                               row[static_cast<std::size_t>(label_col)] + "\"");
            continue;
        }
        post.label = *label;
        post.id = id_col >= 0 ? trim(row[static_cast<std::size_t>(id_col)])
                              : std::to_string(r - 1);
        if (post.id.empty()) post.id = std::to_string(r - 1);
        if (origin_col >= 0) {
            const std::string o = to_lower_ascii(trim(row[static_cast<std::size_t>(origin_col)]));
            if (o == "augmented") post.origin = Origin::augmented;
            else if (o == "original" || o.empty()) post.origin = Origin::original;
            else bad_rows.push_back("row " + std::to_string(r + 1) + ": unknown origin \"" + o + "\"");
        }
        if (parent_col >= 0) {
            const std::string p = trim(row[static_cast<std::size_t>(parent_col)]);
            if (!p.empty()) post.parent_id = p;
        }
        corpus.posts.push_back(std::move(post));
    }

    if (!bad_rows.empty()) {
        std::string msg = "validation error in " + source_name + ":";
        for (const auto& b : bad_rows) msg += "\n  " + b;
        throw ValidationError(msg);
    }
    if (corpus.empty()) throw EmptyCorpusError("empty corpus: " + source_name + " has no data rows");

    validate_corpus(corpus);
    return corpus;
}

Corpus load_dataset(const std::string& path, CorpusFormat format) {
    if (format != CorpusFormat::csv) throw ArgumentError("unsupported corpus format");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset file: " + path);
    return load_dataset_stream(in, path);
}

void save_corpus_stream(const Corpus& corpus, std::ostream& out) {
    csv::write_row(out, {"id", "text", "label", "origin", "parent_id"});
    for (const Post& p : corpus.posts) {
        csv::write_row(out, {p.id, p.text, label_name(p.label), origin_name(p.origin),
                             p.parent_id.value_or("")});
    }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write corpus file: " + path);
    save_corpus_stream(corpus, out);
}

void validate_corpus(const Corpus& corpus) {
    std::unordered_set<std::string> ids;
    std::unordered_set<std::string> original_ids;
    for (const Post& p : corpus.posts) {
        if (p.origin == Origin::original) original_ids.insert(p.id);
    }
    for (const Post& p : corpus.posts) {
        if (p.label < 0 || p.label >= kNumLabels) {
            throw ValidationError("post " + p.id + ": label out of range");
        }
        if (trim(p.text).empty()) throw ValidationError("post " + p.id + ": empty text");
        if (!ids.insert(p.id).second) throw ValidationError("duplicate post id: " + p.id);
        const bool augmented = p.origin == Origin::augmented;
        if (augmented != p.parent_id.has_value()) {
            throw ValidationError("post " + p.id + ": origin/parent_id mismatch");
        }
        if (p.parent_id && !original_ids.count(*p.parent_id)) {
            throw ValidationError("post " + p.id + ": parent_id " + *p.parent_id +
                                  " does not name an original post");
        }
    }
}

LabelDistribution label_distribution(const Corpus& corpus) {
    if (corpus.empty()) throw EmptyCorpusError("label_distribution: empty corpus");
    LabelDistribution dist;
    dist.total = corpus.size();
    for (int l = 0; l < kNumLabels; ++l) dist.counts[l] = 0;
    for (const Post& p : corpus.posts) ++dist.counts[p.label];
    for (const auto& [label, count] : dist.counts) {
        dist.fractions[label] = static_cast<double>(count) / static_cast<double>(dist.total);
    }
    return dist;
}

Split split(const Corpus& corpus, double train_fraction, std::uint64_t seed,
            const SplitOptions& options) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ArgumentError("train_fraction must lie in (0,1)");
    }
    if (corpus.empty()) throw EmptyCorpusError("split: empty corpus");

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    Rng rng(seed);

    if (options.stratified) {
        for (int label = 0; label < kNumLabels; ++label) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
                if (corpus.posts[i].label == label) members.push_back(i);
            }
            if (members.empty()) continue;
            deterministic_shuffle(members, rng);
            const auto n_train = static_cast<std::size_t>(
                std::llround(train_fraction * static_cast<double>(members.size())));
            for (std::size_t j = 0; j < members.size(); ++j) {
                (j < n_train ? train_idx : test_idx).push_back(members[j]);
            }
        }
    } else {
        std::vector<std::size_t> order(corpus.posts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        deterministic_shuffle(order, rng);
        const auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(order.size())));
        for (std::size_t j = 0; j < order.size(); ++j) {
            (j < n_train ? train_idx : test_idx).push_back(order[j]);
        }
    }

    // Membership is random; within each side, keep the corpus order.
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    Split out;
    out.train.schema_version = corpus.schema_version;
    out.test.schema_version = corpus.schema_version;
    for (std::size_t i : train_idx) out.train.posts.push_back(corpus.posts[i]);
    for (std::size_t i : test_idx) out.test.posts.push_back(corpus.posts[i]);
    return out;
}

std::uint64_t corpus_hash(const Corpus& corpus) {
    std::uint64_t h = fnv1a("corpus-v1");
    for (const Post& p : corpus.posts) {
        h = fnv1a(p.id, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(p.text, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(label_name(p.label), h);
        h = fnv1a("\x1e", h);
    }
    return h;
}

}  // namespace depsev
