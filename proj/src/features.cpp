#include "depsev/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <sys/stat.h>

#include "json.hpp"

#include "depsev/common.hpp"
#include "depsev/csv.hpp"

namespace depsev {
namespace {

std::vector<std::string> label_vector(const char* const* begin, int n) {
    return std::vector<std::string>(begin, begin + n);
}

bool file_exists(const std::string& path) {
    struct stat st;
    return ::stat(path.c_str(), &st) == 0;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
    Eigen::VectorXd shifted = v.array() - v.maxCoeff();
    Eigen::VectorXd e = shifted.array().exp();
    return e / e.sum();
}

// Deterministic stand-in scorer: a fixed text hash seeds every dimension, so
// scores are stable across runs and platforms but still vary per text.
class HashScorer final : public Scorer {
  public:
    HashScorer(std::string name, std::vector<std::string> labels)
        : name_(std::move(name)), labels_(std::move(labels)) {}

    const std::vector<std::string>& labels() const override { return labels_; }
    std::string name() const override { return name_; }

    Eigen::VectorXd score(const std::string& text) const override {
        const std::uint64_t base = mix_seed(fnv1a(name_), fnv1a(text));
        Eigen::VectorXd w(static_cast<Eigen::Index>(labels_.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const std::uint64_t h = mix_seed(base, static_cast<std::uint64_t>(i));
            w[i] = static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
        }
        return w / w.sum();
    }

  private:
    std::string name_;
    std::vector<std::string> labels_;
};

// Lexicon-table scorer: CSV word,<label...>; a text scores as the softmax of
// the mean weight row over its known tokens. No known tokens gives the
// softmax of zeros, i.e. uniform.
class TableScorer final : public Scorer {
  public:
    TableScorer(const std::string& path, std::vector<std::string> labels)
        : name_("table:" + path), labels_(std::move(labels)) {
        const auto rows = csv::read_file(path);
        if (rows.empty()) throw SchemaError("scorer table is empty: " + path);
        const auto& header = rows.front();
        if (header.size() != labels_.size() + 1 || to_lower_ascii(trim(header[0])) != "word")
            throw SchemaError("scorer table " + path + " must have header word,<labels>");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (to_lower_ascii(trim(header[i + 1])) != labels_[i])
                throw SchemaError("scorer table " + path + " column " + std::to_string(i + 1) +
                                  " is \"" + header[i + 1] + "\", expected \"" + labels_[i] + "\"");
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() != header.size())
                throw SchemaError("scorer table " + path + " row " + std::to_string(r + 1) +
                                  " has " + std::to_string(row.size()) + " columns");
            Eigen::VectorXd w(static_cast<Eigen::Index>(labels_.size()));
            for (std::size_t c = 0; c < labels_.size(); ++c) {
                try {
                    w[static_cast<Eigen::Index>(c)] = std::stod(row[c + 1]);
                } catch (const std::exception&) {
                    throw SchemaError("scorer table " + path + " row " + std::to_string(r + 1) +
                                      ": bad number \"" + row[c + 1] + "\"");
                }
            }
            table_[to_lower_ascii(trim(row[0]))] = std::move(w);
        }
    }

    const std::vector<std::string>& labels() const override { return labels_; }
    std::string name() const override { return name_; }

    Eigen::VectorXd score(const std::string& text) const override {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels_.size()));
        int hits = 0;
        for (const auto& token : split_whitespace(text)) {
            auto it = table_.find(to_lower_ascii(token));
            if (it != table_.end()) {
                sum += it->second;
                ++hits;
            }
        }
        if (hits > 0) sum /= static_cast<double>(hits);
        return softmax(sum);
    }

  private:
    std::string name_;
    std::vector<std::string> labels_;
    std::map<std::string, Eigen::VectorXd> table_;
};

std::unique_ptr<Scorer> make_scorer(const std::string& spec, const std::string& kind,
                                    std::vector<std::string> labels) {
    if (spec == "stub") return std::make_unique<HashScorer>("stub-" + kind, std::move(labels));
    if (file_exists(spec)) return std::make_unique<TableScorer>(spec, std::move(labels));
    throw ConfigError("unknown " + kind + " scorer \"" + spec +
                      "\": expected \"stub\" or an existing table file");
}

}  // namespace

std::unique_ptr<Scorer> make_emotion_scorer(const std::string& spec) {
    return make_scorer(spec, "emotion", label_vector(kEmotionLabels.data(), kNumEmotions));
}

std::unique_ptr<Scorer> make_sentiment_scorer(const std::string& spec) {
    return make_scorer(spec, "sentiment", label_vector(kSentimentLabels.data(), kNumSentiments));
}

// ─── Medication lexicon ─────────────────────────────────────────────────────

MedicationLexicon MedicationLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open medication lexicon: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        std::string name = trim(line);
        if (name.empty() || name[0] == '#') continue;
        names.push_back(to_lower_ascii(name));
    }
    if (names.empty()) throw ValidationError("medication lexicon is empty: " + path);
    return from_names(std::move(names));
}

MedicationLexicon MedicationLexicon::from_names(std::vector<std::string> names) {
    MedicationLexicon lexicon;
    for (auto& n : names) n = to_lower_ascii(trim(n));
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    lexicon.names_ = std::move(names);
    return lexicon;
}

bool MedicationLexicon::contains(const std::string& token) const {
    return std::binary_search(names_.begin(), names_.end(), to_lower_ascii(token));
}

std::size_t MedicationLexicon::count_mentions(const std::string& text) const {
    std::size_t count = 0;
    for (const auto& token : split_whitespace(text)) {
        if (contains(token)) ++count;
    }
    return count;
}

std::vector<std::string> MedicationLexicon::find_medications(
    const std::vector<std::string>& tokens) const {
    std::vector<std::string> found;
    for (const auto& token : tokens) {
        if (contains(token)) found.push_back(to_lower_ascii(token));
    }
    return found;
}

// ─── Feature assembly ───────────────────────────────────────────────────────

FeaturePreset parse_feature_preset(const std::string& name) {
    if (name == "emotion28_sent3") return FeaturePreset::emotion28_sent3;
    if (name == "emotion28_sent3_med") return FeaturePreset::emotion28_sent3_med;
    throw ConfigError("unknown feature preset: " + name);
}

const char* feature_preset_name(FeaturePreset preset) {
    switch (preset) {
        case FeaturePreset::emotion28_sent3: return "emotion28_sent3";
        case FeaturePreset::emotion28_sent3_med: return "emotion28_sent3_med";
    }
    return "unknown";
}

int feature_dim(FeaturePreset preset) {
    return preset == FeaturePreset::emotion28_sent3_med ? kNumEmotions + kNumSentiments + 1
                                                        : kNumEmotions + kNumSentiments;
}

std::vector<std::string> feature_names(FeaturePreset preset) {
    std::vector<std::string> names;
    for (const char* e : kEmotionLabels) names.emplace_back(std::string("emotion_") + e);
    for (const char* s : kSentimentLabels) names.emplace_back(std::string("sentiment_") + s);
    if (preset == FeaturePreset::emotion28_sent3_med) names.emplace_back("med_mentions");
    return names;
}

namespace {

void check_scorer_dim(const Scorer& scorer, int expected) {
    if (static_cast<int>(scorer.labels().size()) != expected)
        throw FeatureError("scorer " + scorer.name() + " has " +
                           std::to_string(scorer.labels().size()) + " labels, expected " +
                           std::to_string(expected));
}

}  // namespace

Eigen::VectorXd build_feature_vector(const std::string& text, const Scorer& emotion,
                                     const Scorer& sentiment, const MedicationLexicon& lexicon,
                                     FeaturePreset preset) {
    check_scorer_dim(emotion, kNumEmotions);
    check_scorer_dim(sentiment, kNumSentiments);

    Eigen::VectorXd v(feature_dim(preset));
    Eigen::VectorXd e = emotion.score(text);
    Eigen::VectorXd s = sentiment.score(text);
    if (e.size() != kNumEmotions || s.size() != kNumSentiments)
        throw FeatureError("scorer returned a vector of the wrong size");
    v.head(kNumEmotions) = e;
    v.segment(kNumEmotions, kNumSentiments) = s;
    if (preset == FeaturePreset::emotion28_sent3_med) {
        const double capped = std::min<std::size_t>(lexicon.count_mentions(text), 5);
        v[v.size() - 1] = capped / 5.0;
    }
    return v;
}

Eigen::MatrixXd compute_feature_matrix(const std::vector<std::string>& texts,
                                       const Scorer& emotion, const Scorer& sentiment,
                                       const MedicationLexicon& lexicon, FeaturePreset preset) {
    Eigen::MatrixXd features(static_cast<Eigen::Index>(texts.size()), feature_dim(preset));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        features.row(static_cast<Eigen::Index>(i)) =
            build_feature_vector(texts[i], emotion, sentiment, lexicon, preset).transpose();
    }
    return features;
}

// ─── Cache ──────────────────────────────────────────────────────────────────

namespace {

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

std::string format_double(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

void save_feature_cache(const std::string& path, const std::vector<std::string>& ids,
                        const Eigen::MatrixXd& features, const FeatureCacheMeta& meta) {
    if (static_cast<Eigen::Index>(ids.size()) != features.rows())
        throw ArgumentError("feature cache: ids and feature rows disagree");
    if (static_cast<Eigen::Index>(meta.schema.size()) != features.cols())
        throw ArgumentError("feature cache: schema and feature columns disagree");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write feature cache: " + path);
    csv::Row header = {"id"};
    header.insert(header.end(), meta.schema.begin(), meta.schema.end());
    csv::write_row(out, header);
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        csv::Row row = {ids[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < features.cols(); ++c) row.push_back(format_double(features(r, c)));
        csv::write_row(out, row);
    }
    out.close();

    nlohmann::json j;
    j["schema"] = meta.schema;
    j["preset"] = meta.preset;
    j["config_hash"] = meta.config_hash;
    std::ofstream meta_out(meta_path(path), std::ios::binary);
    if (!meta_out) throw RuntimeError("cannot write feature cache sidecar: " + meta_path(path));
    meta_out << j.dump(2) << "\n";
}

FeatureCache load_feature_cache(const std::string& path, const FeatureCacheMeta& expected) {
    std::ifstream meta_in(meta_path(path));
    if (!meta_in)
        throw StaleCacheError("feature cache " + path + " has no sidecar " + meta_path(path) +
                              "; recompute features");
    FeatureCacheMeta meta;
    try {
        nlohmann::json j = nlohmann::json::parse(meta_in);
        meta.schema = j.at("schema").get<std::vector<std::string>>();
        meta.preset = j.at("preset").get<std::string>();
        meta.config_hash = j.at("config_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw StaleCacheError("feature cache sidecar " + meta_path(path) +
                              " is malformed: " + e.what());
    }
    if (meta.preset != expected.preset)
        throw StaleCacheError("feature cache " + path + " was built with preset " + meta.preset +
                              ", current preset is " + expected.preset + "; recompute features");
    if (meta.schema != expected.schema)
        throw StaleCacheError("feature cache " + path +
                              " schema does not match the current feature schema; recompute features");
    if (meta.config_hash != expected.config_hash)
        throw StaleCacheError("feature cache " + path + " was built under config " +
                              meta.config_hash + ", current config is " + expected.config_hash +
                              "; recompute features");

    const auto rows = csv::read_file(path);
    if (rows.empty()) throw StaleCacheError("feature cache " + path + " is empty");
    const auto& header = rows.front();
    if (header.size() != meta.schema.size() + 1 || header[0] != "id")
        throw StaleCacheError("feature cache " + path + " header does not match its sidecar");
    for (std::size_t c = 0; c < meta.schema.size(); ++c) {
        if (header[c + 1] != meta.schema[c])
            throw StaleCacheError("feature cache " + path + " header does not match its sidecar");
    }

    FeatureCache cache;
    cache.meta = std::move(meta);
    cache.features.resize(static_cast<Eigen::Index>(rows.size() - 1),
                          static_cast<Eigen::Index>(cache.meta.schema.size()));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw StaleCacheError("feature cache " + path + " row " + std::to_string(r + 1) +
                                  " is malformed");
        cache.ids.push_back(row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) {
            try {
                cache.features(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
                    std::stod(row[c]);
            } catch (const std::exception&) {
                throw StaleCacheError("feature cache " + path + " row " + std::to_string(r + 1) +
                                      ": bad number \"" + row[c] + "\"");
            }
        }
    }
    return cache;
}

}  // namespace depsev
