#include "depsev/cli.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "depsev/augment.hpp"
#include "depsev/checkpoint.hpp"
#include "depsev/common.hpp"
#include "depsev/corpus.hpp"
#include "depsev/csv.hpp"
#include "depsev/encoder.hpp"
#include "depsev/evaluator.hpp"
#include "depsev/features.hpp"
#include "depsev/model.hpp"
#include "depsev/textprep.hpp"
#include "depsev/trainer.hpp"

namespace depsev {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ─── Small helpers ──────────────────────────────────────────────────────────

std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) {
    return mix_seed(master, fnv1a(stage));
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    const std::string bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return hash_hex(fnv1a(bytes));
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << text;
    if (!out) throw RuntimeError("short write on " + path.string());
}

void write_manifest(const std::string& run_dir, const json& doc) {
    fs::create_directories(run_dir);
    write_text(fs::path(run_dir) / "manifest.json", doc.dump(2) + "\n");
}

void require_artifact(const std::string& path, const std::string& what,
                      const std::string& command) {
    if (!fs::exists(path)) {
        throw ArgumentError(what + " " + path + " not found; run `depsev " + command +
                            "` first");
    }
}

std::string fixed4(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

std::string full17(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

const char* format_extension(ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::markdown: return "md";
    }
    return "txt";
}

// ─── Option bundles ─────────────────────────────────────────────────────────

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string cache_dir = ".depsev-cache";
};

json manifest_base(const char* command, const GlobalOptions& global) {
    return json{{"schema_version", 1}, {"command", command}, {"seed", global.seed}};
}

struct ScorerOptions {
    std::string emotion_model = "stub";
    std::string sentiment_model = "stub";
    std::string medications = "data/medications.txt";
};

struct ScorerBundle {
    std::unique_ptr<Scorer> emotion;
    std::unique_ptr<Scorer> sentiment;
    MedicationLexicon lexicon;
};

ScorerBundle open_scorers(const ScorerOptions& options, FeaturePreset preset) {
    return {make_emotion_scorer(options.emotion_model),
            make_sentiment_scorer(options.sentiment_model),
            preset == FeaturePreset::emotion28_sent3_med
                ? MedicationLexicon::load(options.medications)
                : MedicationLexicon::from_names({})};
}

/// Cache key tying stored features to the scorers that produced them. The
/// lexicon only shapes the medication column, so it is hashed only for the
/// preset that has one.
std::string feature_config_hash(const ScorerOptions& scorers, FeaturePreset preset) {
    std::uint64_t h = fnv1a("feature-config");
    h = fnv1a(scorers.emotion_model, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(scorers.sentiment_model, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(feature_preset_name(preset), h);
    if (preset == FeaturePreset::emotion28_sent3_med) {
        h = fnv1a("\x1f", h);
        h = fnv1a(slurp_file(scorers.medications), h);
    }
    return hash_hex(h);
}

FeatureCacheMeta expected_cache_meta(const ScorerOptions& scorers, FeaturePreset preset) {
    FeatureCacheMeta meta;
    meta.schema = feature_names(preset);
    meta.preset = feature_preset_name(preset);
    meta.config_hash = feature_config_hash(scorers, preset);
    return meta;
}

FeatureCache memory_cache(const Corpus& corpus, const ScorerBundle& scorers,
                          FeaturePreset preset) {
    std::vector<std::string> texts;
    FeatureCache cache;
    texts.reserve(corpus.posts.size());
    cache.ids.reserve(corpus.posts.size());
    for (const Post& post : corpus.posts) {
        texts.push_back(post.text);
        cache.ids.push_back(post.id);
    }
    cache.features =
        compute_feature_matrix(texts, *scorers.emotion, *scorers.sentiment, scorers.lexicon,
                               preset);
    cache.meta.schema = feature_names(preset);
    cache.meta.preset = feature_preset_name(preset);
    cache.meta.config_hash = "in-memory";
    return cache;
}

struct ModelOptions {
    std::string encoder = "toy";
    int cls_layers = 2;
    std::string head = "mlp";
    int head_hidden = 512;
    double dropout = 0.1;
    bool freeze_encoder = true;
    std::string preset = "emotion28_sent3";
};

/// "name" or "name:key=value,..." where keys vocab, hidden, layers, heads,
/// ffn and max_tokens override the preset's dimensions.
EncoderConfig parse_encoder_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    EncoderConfig config = EncoderConfig::preset(spec.substr(0, colon));
    if (colon != std::string::npos) {
        std::istringstream rest(spec.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("encoder spec override '" + item + "' is not key=value");
            }
            const std::string key = item.substr(0, eq);
            int value = 0;
            try {
                value = std::stoi(item.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("encoder spec override " + key + " needs an integer");
            }
            if (key == "vocab") {
                config.vocab_size = value;
            } else if (key == "hidden") {
                config.hidden_dim = value;
            } else if (key == "layers") {
                config.num_layers = value;
            } else if (key == "heads") {
                config.num_heads = value;
            } else if (key == "ffn") {
                config.ffn_dim = value;
            } else if (key == "max_tokens") {
                config.max_tokens = value;
            } else {
                throw ConfigError("unknown encoder spec key '" + key + "'");
            }
        }
        config.name = spec;
    }
    config.validate();
    return config;
}

ModelConfig to_model_config(const ModelOptions& options) {
    ModelConfig config;
    config.encoder = parse_encoder_spec(options.encoder);
    config.cls_layers = options.cls_layers;
    config.features = parse_feature_preset(options.preset);
    config.head = parse_head_kind(options.head);
    config.head_hidden = options.head_hidden;
    config.dropout = options.dropout;
    config.freeze_encoder = options.freeze_encoder;
    config.validate();
    return config;
}

struct TrainerOptions {
    int epochs = 11;
    int batch_size = 8;
    double learning_rate = 1e-5;
    double train_fraction = 0.8;
    int runs = 5;
    std::vector<std::uint64_t> run_seeds;
    bool resplit_per_run = true;
    bool select_best_epoch = false;
};

TrainConfig to_train_config(const TrainerOptions& options, std::uint64_t master,
                            std::string_view stage, std::string_view salt) {
    TrainConfig config;
    config.epochs = options.epochs;
    config.batch_size = options.batch_size;
    config.learning_rate = options.learning_rate;
    config.train_fraction = options.train_fraction;
    config.resplit_per_run = options.resplit_per_run;
    config.select_best_epoch = options.select_best_epoch;
    if (!options.run_seeds.empty()) {
        config.seeds = options.run_seeds;
        config.runs = static_cast<int>(options.run_seeds.size());
    } else {
        config.runs = options.runs;
        config.seeds.clear();
        const std::uint64_t base = mix_seed(stage_seed(master, stage), fnv1a(salt));
        for (int i = 0; i < options.runs; ++i) {
            config.seeds.push_back(mix_seed(base, static_cast<std::uint64_t>(i)));
        }
    }
    config.validate();
    return config;
}

// ─── prep ───────────────────────────────────────────────────────────────────

struct PrepOptions {
    std::string input;
    std::string output;
    std::string contractions = "data/contractions.csv";
    std::vector<std::string> steps = {"all"};
    std::string out = "runs/prep";
};

int cmd_prep(const GlobalOptions& global, const PrepOptions& options, std::ostream& out,
             std::ostream& err) {
    if (!fs::exists(options.input)) {
        throw ArgumentError("input dataset " + options.input + " not found");
    }

    CleaningConfig cleaning;
    ContractionTable table = load_contraction_table(options.contractions);
    if (options.steps.size() == 1 && options.steps.front() == "all") {
        cleaning = CleaningConfig::all_steps(std::move(table));
    } else {
        for (const std::string& name : options.steps) {
            cleaning.steps.push_back(parse_clean_step(name));
        }
        cleaning.contraction_table = std::move(table);
    }
    cleaning.validate();

    const std::string output =
        options.output.empty() ? options.out + "/corpus.csv" : options.output;
    const Corpus raw = load_dataset(options.input);
    const std::string input_hash = hash_hex(corpus_hash(raw));
    const std::string config_hash = hash_hex(cleaning.config_hash());
    const std::string sidecar = output + ".meta.json";

    json manifest = manifest_base("prep", global);
    manifest["inputs"] = json{{options.input, file_fingerprint(options.input)}};
    manifest["outputs"] = json::array({output, sidecar});

    if (fs::exists(output) && fs::exists(sidecar)) {
        bool fresh = false;
        try {
            std::ifstream meta_in(sidecar);
            const json meta = json::parse(meta_in);
            fresh = meta.value("input_hash", "") == input_hash &&
                    meta.value("config_hash", "") == config_hash;
        } catch (const json::exception&) {
            fresh = false;
        }
        if (fresh) {
            out << "prep: " << output << " is up to date (" << raw.posts.size()
                << " posts)\n";
            manifest["skipped"] = true;
            write_manifest(options.out, manifest);
            return 0;
        }
    }

    Corpus cleaned = raw;
    std::vector<Post> kept;
    kept.reserve(cleaned.posts.size());
    std::size_t dropped = 0;
    for (Post& post : cleaned.posts) {
        post.text = clean(post.text, cleaning);
        if (split_whitespace(post.text).empty()) {
            err << "warning: post " << post.id << " is empty after cleaning, dropped\n";
            ++dropped;
            continue;
        }
        kept.push_back(std::move(post));
    }
    cleaned.posts = std::move(kept);
    if (cleaned.posts.empty()) {
        throw EmptyCorpusError("every post emptied during cleaning");
    }
    validate_corpus(cleaned);

    ensure_parent(output);
    save_corpus(cleaned, output);
    write_text(sidecar, json{{"schema_version", 1},
                             {"input_hash", input_hash},
                             {"config_hash", config_hash}}
                                .dump(2) +
                            "\n");

    out << "prep: cleaned " << cleaned.posts.size() << " posts -> " << output;
    if (dropped > 0) out << " (" << dropped << " dropped)";
    out << "\n";
    manifest["posts"] = cleaned.posts.size();
    write_manifest(options.out, manifest);
    return 0;
}

// ─── features ───────────────────────────────────────────────────────────────

struct FeatureOptions {
    std::string corpus;
    std::string cache;
    std::string preset = "emotion28_sent3";
    ScorerOptions scorers;
    std::string out = "runs/features";
};

int cmd_features(const GlobalOptions& global, const FeatureOptions& options,
                 std::ostream& out, std::ostream&) {
    require_artifact(options.corpus, "corpus", "prep");
    const std::string cache =
        options.cache.empty() ? global.cache_dir + "/features.csv" : options.cache;
    const FeaturePreset preset = parse_feature_preset(options.preset);
    const Corpus corpus = load_dataset(options.corpus);
    const FeatureCacheMeta expected = expected_cache_meta(options.scorers, preset);

    std::vector<std::string> ids;
    ids.reserve(corpus.posts.size());
    for (const Post& post : corpus.posts) ids.push_back(post.id);

    json manifest = manifest_base("features", global);
    manifest["inputs"] = json{{options.corpus, file_fingerprint(options.corpus)}};
    manifest["outputs"] = json::array({cache, cache + ".meta.json"});

    if (fs::exists(cache)) {
        bool fresh = false;
        try {
            fresh = load_feature_cache(cache, expected).ids == ids;
        } catch (const ValidationError&) {
            fresh = false;
        }
        if (fresh) {
            out << "features: " << cache << " is up to date (" << ids.size() << " rows)\n";
            manifest["skipped"] = true;
            write_manifest(options.out, manifest);
            return 0;
        }
    }

    const ScorerBundle scorers = open_scorers(options.scorers, preset);
    std::vector<std::string> texts;
    texts.reserve(corpus.posts.size());
    for (const Post& post : corpus.posts) texts.push_back(post.text);
    const Eigen::MatrixXd features = compute_feature_matrix(
        texts, *scorers.emotion, *scorers.sentiment, scorers.lexicon, preset);

    ensure_parent(cache);
    save_feature_cache(cache, ids, features, expected);
    out << "features: " << ids.size() << " posts x " << features.cols() << " features -> "
        << cache << "\n";
    write_manifest(options.out, manifest);
    return 0;
}

// ─── augment ────────────────────────────────────────────────────────────────

struct AugmentOptions {
    std::string corpus;
    std::string output;
    std::vector<int> counts = {0, 290, 250, 281};
    double rate = 0.15;
    int copies = 1;
    std::string predictor = "stub";
    std::string encoder = "toy";
    std::string out = "runs/augment";
};

std::vector<std::string> frequent_tokens(const Corpus& corpus, std::size_t limit) {
    std::map<std::string, std::size_t> counts;
    for (const Post& post : corpus.posts) {
        for (const std::string& token : split_whitespace(post.text)) ++counts[token];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    for (const auto& [token, n] : ranked) {
        (void)n;
        if (tokens.size() == limit) break;
        if (token == kMaskToken) continue;
        tokens.push_back(token);
    }
    if (tokens.size() < 2) {
        throw ArgumentError("corpus is too small to build an encoder candidate list");
    }
    return tokens;
}

std::unique_ptr<MaskedTokenPredictor> make_predictor(const std::string& name,
                                                     const std::string& encoder_spec,
                                                     const Corpus& corpus,
                                                     std::uint64_t master) {
    if (name == "stub") return std::make_unique<HashMaskedTokenPredictor>();
    if (name == "encoder") {
        auto encoder = std::make_shared<TransformerEncoder>(
            parse_encoder_spec(encoder_spec), stage_seed(master, "augment-encoder"));
        return std::make_unique<EncoderMaskedPredictor>(std::move(encoder),
                                                        frequent_tokens(corpus, 50));
    }
    throw ConfigError("unknown predictor '" + name + "'; expected stub or encoder");
}

std::string before_after_table(const LabelDistribution& before,
                               const LabelDistribution& after) {
    const auto count_of = [](const LabelDistribution& dist, int label) -> std::size_t {
        const auto it = dist.counts.find(label);
        return it == dist.counts.end() ? 0 : it->second;
    };
    std::ostringstream table;
    table << "| label | before | after |\n| --- | --- | --- |\n";
    for (int c = 0; c < kNumLabels; ++c) {
        table << "| " << kLabelNames[static_cast<std::size_t>(c)] << " | "
              << count_of(before, c) << " | " << count_of(after, c) << " |\n";
    }
    return table.str();
}

int cmd_augment(const GlobalOptions& global, const AugmentOptions& options,
                std::ostream& out, std::ostream& err) {
    require_artifact(options.corpus, "corpus", "prep");
    const std::string output =
        options.output.empty() ? options.out + "/corpus.csv" : options.output;
    const Corpus corpus = load_dataset(options.corpus);

    if (options.counts.size() != static_cast<std::size_t>(kNumLabels)) {
        throw ArgumentError("--counts needs exactly " + std::to_string(kNumLabels) +
                            " values");
    }
    AugmentationPlan plan;
    std::copy(options.counts.begin(), options.counts.end(), plan.counts.begin());
    plan.rate = options.rate;
    plan.copies = options.copies;
    plan.seed = stage_seed(global.seed, "augment");

    const std::unique_ptr<MaskedTokenPredictor> predictor =
        make_predictor(options.predictor, options.encoder, corpus, global.seed);
    const AugmentResult result = augment_corpus(corpus, plan, *predictor);
    for (const std::string& warning : result.warnings) {
        err << "warning: " << warning << "\n";
    }

    ensure_parent(output);
    save_corpus(result.corpus, output);

    const std::string table =
        before_after_table(label_distribution(corpus), label_distribution(result.corpus));
    out << table;
    out << "total: " << corpus.posts.size() << " -> " << result.corpus.posts.size()
        << " posts\n";
    fs::create_directories(options.out);
    write_text(fs::path(options.out) / "augment_report.md", table);

    json manifest = manifest_base("augment", global);
    manifest["inputs"] = json{{options.corpus, file_fingerprint(options.corpus)}};
    manifest["outputs"] = json::array({output, options.out + "/augment_report.md"});
    manifest["plan"] = {{"counts", plan.counts},
                        {"rate", plan.rate},
                        {"copies", plan.copies},
                        {"seed", plan.seed},
                        {"predictor", predictor->name()}};
    manifest["warnings"] = result.warnings.size();
    write_manifest(options.out, manifest);
    return 0;
}

// ─── train ──────────────────────────────────────────────────────────────────

struct TrainCmdOptions {
    std::string corpus;
    std::string cache;
    ModelOptions model;
    TrainerOptions trainer;
    ScorerOptions scorers;
    std::string out = "runs/train";
};

int cmd_train(const GlobalOptions& global, const TrainCmdOptions& options,
              std::ostream& out, std::ostream&) {
    require_artifact(options.corpus, "corpus", "prep");
    const std::string cache =
        options.cache.empty() ? global.cache_dir + "/features.csv" : options.cache;
    require_artifact(cache, "feature cache", "features");

    const ModelConfig model_config = to_model_config(options.model);
    TrainConfig train_config = to_train_config(options.trainer, global.seed, "train", "");
    train_config.checkpoint_dir = options.out + "/checkpoints";

    const Corpus corpus = load_dataset(options.corpus);
    const FeatureCache cache_data =
        load_feature_cache(cache, expected_cache_meta(options.scorers, model_config.features));

    const ExperimentResult result =
        run_experiment(model_config, train_config, corpus, cache_data);

    fs::create_directories(options.out);
    write_text(fs::path(options.out) / "summary.json",
               render_report(result.summary, ReportFormat::json));
    write_text(fs::path(options.out) / "summary.md",
               render_report(result.summary, ReportFormat::markdown));

    json history = json::array();
    for (const ExperimentRun& run : result.runs) {
        history.push_back({{"seed", run.seed},
                           {"train_loss", run.history.train_loss},
                           {"eval_f1", run.history.eval_f1},
                           {"wall_seconds", run.history.wall_seconds}});
    }
    write_text(fs::path(options.out) / "history.json",
               json{{"schema_version", 1}, {"runs", history}}.dump(2) + "\n");
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const fs::path run_dir =
            fs::path(train_config.checkpoint_dir) / ("run" + std::to_string(i + 1));
        write_text(run_dir / "metrics.json",
                   render_report(result.runs[i].metrics, ReportFormat::json));
    }

    out << render_report(result.summary, ReportFormat::markdown);
    out << "seeds:";
    for (std::uint64_t seed : train_config.seeds) out << " " << seed;
    out << "\n";

    json manifest = manifest_base("train", global);
    manifest["inputs"] = json{{options.corpus, file_fingerprint(options.corpus)},
                              {cache, file_fingerprint(cache)}};
    manifest["outputs"] = json::array({options.out + "/summary.json",
                                       options.out + "/summary.md",
                                       options.out + "/history.json",
                                       train_config.checkpoint_dir});
    manifest["run_seeds"] = train_config.seeds;
    manifest["model"] = {{"encoder", model_config.encoder.name},
                         {"cls_layers", model_config.cls_layers},
                         {"head", head_kind_name(model_config.head)},
                         {"features", feature_preset_name(model_config.features)}};
    write_manifest(options.out, manifest);
    return 0;
}

// ─── evaluate ───────────────────────────────────────────────────────────────

struct EvaluateOptions {
    std::string checkpoint;
    std::string corpus;
    std::string cache;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
    bool full = false;
    std::string format = "markdown";
    ScorerOptions scorers;
    std::string out = "runs/evaluate";
};

int cmd_evaluate(const GlobalOptions& global, const EvaluateOptions& options,
                 std::ostream& out, std::ostream&) {
    require_artifact(options.checkpoint, "checkpoint", "train");
    require_artifact(options.corpus, "corpus", "prep");
    const std::string cache =
        options.cache.empty() ? global.cache_dir + "/features.csv" : options.cache;
    require_artifact(cache, "feature cache", "features");

    Classifier model = load_checkpoint(options.checkpoint);
    const Corpus corpus = load_dataset(options.corpus);
    const FeatureCache cache_data = load_feature_cache(
        cache, expected_cache_meta(options.scorers, model.config().features));

    const Corpus target =
        options.full ? corpus
                     : split(corpus, options.train_fraction, options.split_seed).test;
    const std::vector<TrainSample> samples =
        build_samples(target, cache_data, model.config());

    std::vector<int> predictions;
    std::vector<int> truth;
    predictions.reserve(samples.size());
    truth.reserve(samples.size());
    for (const TrainSample& sample : samples) {
        predictions.push_back(model.predict(sample.token_ids, sample.features));
        truth.push_back(sample.label);
    }
    const MetricsReport report = evaluate(predictions, truth);

    const ReportFormat format = parse_report_format(options.format);
    fs::create_directories(options.out);
    write_text(fs::path(options.out) / "metrics.json",
               render_report(report, ReportFormat::json));
    if (format != ReportFormat::json) {
        write_text(fs::path(options.out) /
                       (std::string("metrics.") + format_extension(format)),
                   render_report(report, format));
    }
    {
        std::ostringstream table;
        std::vector<std::string> header = {"truth"};
        for (int c = 0; c < kNumLabels; ++c) {
            header.push_back(kLabelNames[static_cast<std::size_t>(c)]);
        }
        csv::write_row(table, header);
        for (int r = 0; r < kNumLabels; ++r) {
            std::vector<std::string> row = {kLabelNames[static_cast<std::size_t>(r)]};
            for (int c = 0; c < kNumLabels; ++c) {
                row.push_back(std::to_string(
                    static_cast<long long>(report.raw_confusion(r, c))));
            }
            csv::write_row(table, row);
        }
        write_text(fs::path(options.out) / "confusion.csv", table.str());
    }
    out << render_report(report, format);

    json manifest = manifest_base("evaluate", global);
    manifest["inputs"] = json{{options.checkpoint, "directory"},
                              {options.corpus, file_fingerprint(options.corpus)},
                              {cache, file_fingerprint(cache)}};
    manifest["outputs"] = json::array(
        {options.out + "/metrics.json", options.out + "/confusion.csv"});
    manifest["split"] = options.full
                            ? json{{"full", true}}
                            : json{{"train_fraction", options.train_fraction},
                                   {"seed", options.split_seed}};
    write_manifest(options.out, manifest);
    return 0;
}

// ─── predict ────────────────────────────────────────────────────────────────

struct PredictOptions {
    std::string checkpoint;
    bool untrained = false;
    std::string text;
    std::string input;
    ModelOptions model;
    ScorerOptions scorers;
    std::string out = "runs/predict";
};

int cmd_predict(const GlobalOptions& global, const PredictOptions& options, bool has_text,
                std::ostream& out, std::ostream&) {
    if (options.untrained == !options.checkpoint.empty()) {
        throw ArgumentError("predict needs exactly one of --checkpoint or --untrained");
    }
    if (has_text == !options.input.empty()) {
        throw ArgumentError("predict needs exactly one of --text or --input");
    }

    Classifier model = [&] {
        if (!options.untrained) {
            require_artifact(options.checkpoint, "checkpoint", "train");
            return load_checkpoint(options.checkpoint);
        }
        Classifier untrained(to_model_config(options.model), 0);
        for (const auto& [name, param] : untrained.named_parameters()) {
            (void)name;
            param->value.setZero();
        }
        return untrained;
    }();

    const FeaturePreset preset = model.config().features;
    const ScorerBundle scorers = open_scorers(options.scorers, preset);
    const HashTokenizer tokenizer(model.config().encoder.vocab_size);
    const auto predict_one = [&](const std::string& text) {
        const std::vector<int> tokens =
            tokenizer.encode(text, model.config().encoder.max_tokens);
        const Eigen::VectorXd features = build_feature_vector(
            text, *scorers.emotion, *scorers.sentiment, scorers.lexicon, preset);
        return model.predict(tokens, features);
    };

    json manifest = manifest_base("predict", global);
    manifest["model"] = options.untrained ? "untrained" : options.checkpoint;

    if (has_text) {
        out << label_name(predict_one(options.text)) << "\n";
        manifest["outputs"] = json::array();
        write_manifest(options.out, manifest);
        return 0;
    }

    require_artifact(options.input, "input corpus", "prep");
    const Corpus posts = load_dataset(options.input);
    fs::create_directories(options.out);
    const fs::path predictions_path = fs::path(options.out) / "predictions.csv";
    std::ofstream file(predictions_path, std::ios::binary);
    if (!file) throw RuntimeError("cannot write " + predictions_path.string());
    csv::write_row(file, {"id", "prediction", "predicted_label"});
    for (const Post& post : posts.posts) {
        const int label = predict_one(post.text);
        csv::write_row(file, {post.id, std::to_string(label), label_name(label)});
    }
    if (!file) throw RuntimeError("short write on " + predictions_path.string());
    out << "predict: wrote " << posts.posts.size() << " predictions -> "
        << predictions_path.string() << "\n";

    manifest["inputs"] = json{{options.input, file_fingerprint(options.input)}};
    manifest["outputs"] = json::array({predictions_path.string()});
    write_manifest(options.out, manifest);
    return 0;
}

// ─── ablate ─────────────────────────────────────────────────────────────────

struct AblateOptions {
    std::string corpus;
    std::vector<int> k = {1, 2, 3, 4, 5, 6};
    std::vector<std::string> heads = {"mlp"};
    std::vector<std::string> encoders = {"toy"};
    std::vector<std::string> augmentation = {"off"};
    double aug_rate = 0.15;
    std::vector<int> aug_counts;
    int head_hidden = 512;
    double dropout = 0.1;
    std::string preset = "emotion28_sent3";
    TrainerOptions trainer;
    ScorerOptions scorers;
    std::string out = "runs/ablate";
};

struct AblationCell {
    std::string id;
    std::string encoder;
    std::string head;
    int k = 1;
    bool augmented = false;
};

std::string cell_id(const std::string& encoder, const std::string& head, int k, bool aug) {
    return encoder + "/" + head + "/k" + std::to_string(k) + "/" + (aug ? "on" : "off");
}

std::array<int, kNumLabels> resolve_aug_counts(const std::vector<int>& flag,
                                               const Corpus& corpus) {
    std::array<int, kNumLabels> counts{};
    if (!flag.empty()) {
        if (flag.size() != static_cast<std::size_t>(kNumLabels)) {
            throw ArgumentError("--aug-counts needs exactly " + std::to_string(kNumLabels) +
                                " values");
        }
        std::copy(flag.begin(), flag.end(), counts.begin());
        return counts;
    }
    // Default plan: grow every minority class toward the majority, capped by
    // its own pool so the draw stays valid on any corpus.
    const LabelDistribution dist = label_distribution(corpus);
    std::size_t majority = 0;
    for (const auto& [label, n] : dist.counts) {
        (void)label;
        majority = std::max(majority, n);
    }
    for (int c = 0; c < kNumLabels; ++c) {
        const auto it = dist.counts.find(c);
        const std::size_t n = it == dist.counts.end() ? 0 : it->second;
        counts[static_cast<std::size_t>(c)] =
            n == majority ? 0 : static_cast<int>(std::min(n, majority - n));
    }
    return counts;
}

void write_ablation_tables(const std::vector<AblationCell>& cells,
                           const std::map<std::string, json>& rows, const fs::path& out_dir,
                           std::ostream& out) {
    std::ostringstream csv_text;
    std::ostringstream md;
    csv::write_row(csv_text,
                   {"cell", "encoder", "head", "k", "augmentation", "weighted_precision",
                    "weighted_recall", "weighted_f1", "accuracy", "delta_f1", "status",
                    "error"});
    md << "| encoder | head | k | augmentation | weighted precision | weighted recall "
          "| weighted F1 | accuracy | delta F1 | status |\n";
    md << "| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";

    for (const AblationCell& cell : cells) {
        const auto it = rows.find(cell.id);
        if (it == rows.end()) continue;
        const json& row = it->second;
        const std::string aug = cell.augmented ? "on" : "off";
        if (row.value("status", "") != "ok") {
            csv::write_row(csv_text, {cell.id, cell.encoder, cell.head,
                                      std::to_string(cell.k), aug, "", "", "", "", "",
                                      "error", row.value("error", "")});
            md << "| " << cell.encoder << " | " << cell.head << " | " << cell.k << " | "
               << aug << " |  |  |  |  |  | error |\n";
            continue;
        }
        const auto mean_of = [&](const char* key) {
            return row.at(key).at("mean").get<double>();
        };
        std::string delta_csv;
        std::string delta_md;
        if (cell.augmented) {
            const auto twin = rows.find(cell_id(cell.encoder, cell.head, cell.k, false));
            if (twin != rows.end() && twin->second.value("status", "") == "ok") {
                const double delta =
                    mean_of("weighted_f1") -
                    twin->second.at("weighted_f1").at("mean").get<double>();
                delta_csv = full17(delta);
                delta_md = (delta < 0 ? "" : "+") + fixed4(delta);
            }
        }
        csv::write_row(csv_text,
                       {cell.id, cell.encoder, cell.head, std::to_string(cell.k), aug,
                        full17(mean_of("weighted_precision")),
                        full17(mean_of("weighted_recall")), full17(mean_of("weighted_f1")),
                        full17(mean_of("accuracy")), delta_csv, "ok", ""});
        md << "| " << cell.encoder << " | " << cell.head << " | " << cell.k << " | " << aug
           << " | " << fixed4(mean_of("weighted_precision")) << " | "
           << fixed4(mean_of("weighted_recall")) << " | " << fixed4(mean_of("weighted_f1"))
           << " | " << fixed4(mean_of("accuracy")) << " | " << delta_md << " | ok |\n";
    }
    write_text(out_dir / "table.csv", csv_text.str());
    write_text(out_dir / "table.md", md.str());
    out << md.str();
}

int cmd_ablate(const GlobalOptions& global, const AblateOptions& options, std::ostream& out,
               std::ostream& err) {
    require_artifact(options.corpus, "corpus", "prep");
    if (options.k.empty() || options.heads.empty() || options.encoders.empty() ||
        options.augmentation.empty()) {
        throw ConfigError("ablation grid axes must be non-empty");
    }
    for (int k : options.k) {
        if (k < 1 || k > 6) throw ConfigError("ablation k values must lie in 1..6");
    }
    for (const std::string& head : options.heads) parse_head_kind(head);
    for (const std::string& encoder : options.encoders) parse_encoder_spec(encoder);
    bool aug_off = false;
    bool aug_on = false;
    for (const std::string& value : options.augmentation) {
        if (value == "off") {
            aug_off = true;
        } else if (value == "on") {
            aug_on = true;
        } else {
            throw ConfigError("augmentation axis values are on/off, got '" + value + "'");
        }
    }

    const FeaturePreset preset = parse_feature_preset(options.preset);
    const Corpus base = load_dataset(options.corpus);

    // off cells run first so an on cell's delta partner is always available
    std::vector<AblationCell> cells;
    for (int aug = 0; aug <= 1; ++aug) {
        if ((aug == 0 && !aug_off) || (aug == 1 && !aug_on)) continue;
        for (const std::string& encoder : options.encoders) {
            for (const std::string& head : options.heads) {
                for (int k : options.k) {
                    cells.push_back(
                        {cell_id(encoder, head, k, aug == 1), encoder, head, k, aug == 1});
                }
            }
        }
    }

    fs::create_directories(options.out);
    const fs::path results_path = fs::path(options.out) / "results.jsonl";
    std::map<std::string, json> rows;
    if (fs::exists(results_path)) {
        std::ifstream in(results_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                json row = json::parse(line);
                std::string cell = row.at("cell").get<std::string>();
                rows[cell] = std::move(row);
            } catch (const json::exception&) {
                // torn tail line from an interrupted append
            }
        }
    }

    const ScorerBundle scorers = open_scorers(options.scorers, preset);
    std::optional<FeatureCache> base_cache;
    std::optional<Corpus> augmented;
    std::optional<FeatureCache> augmented_cache;

    const auto corpus_of = [&](bool aug) -> const Corpus& {
        if (!aug) return base;
        if (!augmented) {
            AugmentationPlan plan;
            plan.counts = resolve_aug_counts(options.aug_counts, base);
            plan.rate = options.aug_rate;
            plan.copies = 1;
            plan.seed = stage_seed(global.seed, "ablate-augment");
            const HashMaskedTokenPredictor predictor;
            AugmentResult result = augment_corpus(base, plan, predictor);
            for (const std::string& warning : result.warnings) {
                err << "warning: " << warning << "\n";
            }
            augmented = std::move(result.corpus);
        }
        return *augmented;
    };
    const auto cache_of = [&](bool aug) -> const FeatureCache& {
        std::optional<FeatureCache>& slot = aug ? augmented_cache : base_cache;
        if (!slot) slot = memory_cache(corpus_of(aug), scorers, preset);
        return *slot;
    };

    std::size_t computed = 0;
    std::size_t reused = 0;
    std::size_t failed = 0;
    for (const AblationCell& cell : cells) {
        const auto it = rows.find(cell.id);
        if (it != rows.end() && it->second.value("status", "") == "ok") {
            ++reused;
            continue;
        }
        json row{{"cell", cell.id},
                 {"encoder", cell.encoder},
                 {"head", cell.head},
                 {"k", cell.k},
                 {"augmentation", cell.augmented ? "on" : "off"}};
        try {
            ModelConfig model_config;
            model_config.encoder = parse_encoder_spec(cell.encoder);
            model_config.cls_layers = cell.k;
            model_config.features = preset;
            model_config.head = parse_head_kind(cell.head);
            model_config.head_hidden = options.head_hidden;
            model_config.dropout = options.dropout;
            const TrainConfig train_config =
                to_train_config(options.trainer, global.seed, "ablate", cell.id);
            const ExperimentResult result = run_experiment(
                model_config, train_config, corpus_of(cell.augmented),
                cache_of(cell.augmented));
            const auto stat = [](const MetricStat& s) {
                return json{{"mean", s.mean}, {"std", s.std}};
            };
            row["status"] = "ok";
            row["runs"] = result.runs.size();
            row["weighted_precision"] = stat(result.summary.weighted_precision);
            row["weighted_recall"] = stat(result.summary.weighted_recall);
            row["weighted_f1"] = stat(result.summary.weighted_f1);
            row["accuracy"] = stat(result.summary.accuracy);
            ++computed;
        } catch (const Error& e) {
            row["status"] = "error";
            row["error"] = e.what();
            err << "warning: cell " << cell.id << " failed: " << e.what() << "\n";
            ++failed;
        }
        std::ofstream append(results_path, std::ios::app);
        append << row.dump() << "\n";
        if (!append) throw RuntimeError("cannot append to " + results_path.string());
        rows[cell.id] = std::move(row);
    }

    write_ablation_tables(cells, rows, options.out, out);
    out << "ablate: " << computed << " computed, " << reused << " reused, " << failed
        << " failed\n";

    json manifest = manifest_base("ablate", global);
    manifest["inputs"] = json{{options.corpus, file_fingerprint(options.corpus)}};
    manifest["outputs"] = json::array({options.out + "/results.jsonl",
                                       options.out + "/table.csv",
                                       options.out + "/table.md"});
    manifest["cells"] = cells.size();
    write_manifest(options.out, manifest);
    return 0;
}

// ─── report ─────────────────────────────────────────────────────────────────

struct ReportOptions {
    std::string input;
    std::string format = "markdown";
    std::string output;
};

int cmd_report(const GlobalOptions&, const ReportOptions& options, std::ostream& out,
               std::ostream&) {
    if (!fs::exists(options.input)) {
        throw ArgumentError("report input " + options.input +
                            " not found; run `depsev train` or `depsev evaluate` first");
    }
    const std::string text = slurp_file(options.input);
    const ReportFormat format = parse_report_format(options.format);

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError("report input is not JSON: " + std::string(e.what()));
    }

    std::string rendered;
    if (doc.is_object() && doc.contains("runs")) {
        std::vector<MetricsReport> runs;
        try {
            for (const json& run : doc.at("runs")) {
                runs.push_back(parse_metrics_json(run.dump()));
            }
        } catch (const json::exception& e) {
            throw SchemaError("report input has a malformed runs array: " +
                              std::string(e.what()));
        }
        rendered = render_report(summarize_runs(runs), format);
    } else {
        rendered = render_report(parse_metrics_json(text), format);
    }

    if (options.output.empty()) {
        out << rendered;
    } else {
        ensure_parent(options.output);
        write_text(options.output, rendered);
        out << "report: wrote " << options.output << "\n";
    }
    return 0;
}

}  // namespace

// ─── Entry point ────────────────────────────────────────────────────────────

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    GlobalOptions global;
    PrepOptions prep_opts;
    FeatureOptions feature_opts;
    AugmentOptions augment_opts;
    TrainCmdOptions train_opts;
    EvaluateOptions eval_opts;
    PredictOptions predict_opts;
    AblateOptions ablate_opts;
    ReportOptions report_opts;
    ablate_opts.trainer.runs = 1;

    CLI::App app{"depression severity classification pipeline"};
    app.name("depsev");
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "TOML-style config file; [command] sections hold that command's flags");
    app.add_option("--seed", global.seed, "master seed expanded into per-stage seeds")
        ->capture_default_str();
    app.add_option("--cache-dir", global.cache_dir, "feature cache directory")
        ->envname("DEPSEV_CACHE_DIR")
        ->capture_default_str();

    const auto add_scorer_options = [](CLI::App* cmd, ScorerOptions& options) {
        cmd->add_option("--emotion-model", options.emotion_model,
                        "emotion scorer: stub or a scorer table file")
            ->capture_default_str();
        cmd->add_option("--sentiment-model", options.sentiment_model,
                        "sentiment scorer: stub or a scorer table file")
            ->capture_default_str();
        cmd->add_option("--medications", options.medications, "medication lexicon file")
            ->capture_default_str();
    };
    const auto add_model_options = [](CLI::App* cmd, ModelOptions& options) {
        cmd->add_option("--encoder", options.encoder,
                        "encoder preset, with optional name:key=value,... overrides")
            ->capture_default_str();
        cmd->add_option("--cls-layers", options.cls_layers, "pooled [CLS] layers")
            ->capture_default_str();
        cmd->add_option("--head", options.head, "head: mlp, lstm, mm_gate or mm_xatt")
            ->capture_default_str();
        cmd->add_option("--head-hidden", options.head_hidden, "head hidden width")
            ->capture_default_str();
        cmd->add_option("--dropout", options.dropout, "dropout on the fused vector")
            ->capture_default_str();
        cmd->add_option("--freeze-encoder", options.freeze_encoder, "train the head only")
            ->capture_default_str();
        cmd->add_option("--features", options.preset, "feature preset")
            ->capture_default_str();
    };
    const auto add_trainer_options = [](CLI::App* cmd, TrainerOptions& options) {
        cmd->add_option("--epochs", options.epochs, "training epochs")
            ->capture_default_str();
        cmd->add_option("--batch-size", options.batch_size, "samples per step")
            ->capture_default_str();
        cmd->add_option("--learning-rate", options.learning_rate, "Adam step size")
            ->capture_default_str();
        cmd->add_option("--train-fraction", options.train_fraction,
                        "train share of the split")
            ->capture_default_str();
        cmd->add_option("--runs", options.runs, "independent seeded runs")
            ->capture_default_str();
        cmd->add_option("--run-seeds", options.run_seeds,
                        "explicit per-run seeds; overrides --runs")
            ->delimiter(',');
        cmd->add_option("--resplit-per-run", options.resplit_per_run,
                        "fresh split per run")
            ->capture_default_str();
        cmd->add_flag("--select-best-epoch", options.select_best_epoch,
                      "keep the best eval epoch instead of the last");
    };

    CLI::App* prep_cmd =
        app.add_subcommand("prep", "clean a raw dataset into the canonical corpus");
    prep_cmd->add_option("--input", prep_opts.input, "raw dataset CSV (text,label)")
        ->required();
    prep_cmd->add_option("--output", prep_opts.output,
                         "cleaned corpus path (default <out>/corpus.csv)");
    prep_cmd->add_option("--contractions", prep_opts.contractions, "contraction table CSV")
        ->capture_default_str();
    prep_cmd->add_option("--steps", prep_opts.steps, "cleaning steps, in canonical order")
        ->delimiter(',');
    prep_cmd->add_option("--out", prep_opts.out, "run directory")->capture_default_str();

    CLI::App* features_cmd =
        app.add_subcommand("features", "extract auxiliary features into the cache");
    features_cmd->add_option("--corpus", feature_opts.corpus, "cleaned corpus")->required();
    features_cmd->add_option("--cache", feature_opts.cache,
                             "cache path (default <cache-dir>/features.csv)");
    features_cmd->add_option("--preset", feature_opts.preset, "feature preset")
        ->capture_default_str();
    add_scorer_options(features_cmd, feature_opts.scorers);
    features_cmd->add_option("--out", feature_opts.out, "run directory")
        ->capture_default_str();

    CLI::App* augment_cmd =
        app.add_subcommand("augment", "expand minority classes by contextual edits");
    augment_cmd->add_option("--corpus", augment_opts.corpus, "cleaned corpus")->required();
    augment_cmd->add_option("--output", augment_opts.output,
                            "augmented corpus path (default <out>/corpus.csv)");
    augment_cmd->add_option("--counts", augment_opts.counts,
                            "posts to draw per class, minimum..severe")
        ->delimiter(',');
    augment_cmd->add_option("--rate", augment_opts.rate, "edited token fraction")
        ->capture_default_str();
    augment_cmd->add_option("--copies", augment_opts.copies, "copies per drawn post")
        ->capture_default_str();
    augment_cmd->add_option("--predictor", augment_opts.predictor,
                            "masked-token predictor: stub or encoder")
        ->capture_default_str();
    augment_cmd->add_option("--encoder", augment_opts.encoder,
                            "encoder spec for the encoder predictor")
        ->capture_default_str();
    augment_cmd->add_option("--out", augment_opts.out, "run directory")
        ->capture_default_str();

    CLI::App* train_cmd = app.add_subcommand("train", "run the training experiment");
    train_cmd->add_option("--corpus", train_opts.corpus, "training corpus")->required();
    train_cmd->add_option("--cache", train_opts.cache,
                          "feature cache (default <cache-dir>/features.csv)");
    add_model_options(train_cmd, train_opts.model);
    add_trainer_options(train_cmd, train_opts.trainer);
    add_scorer_options(train_cmd, train_opts.scorers);
    train_cmd->add_option("--out", train_opts.out, "run directory")->capture_default_str();

    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "score a checkpoint on a held-out split");
    eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint directory")
        ->required();
    eval_cmd->add_option("--corpus", eval_opts.corpus, "corpus to split")->required();
    eval_cmd->add_option("--cache", eval_opts.cache,
                         "feature cache (default <cache-dir>/features.csv)");
    eval_cmd->add_option("--train-fraction", eval_opts.train_fraction,
                         "train share of the split")
        ->capture_default_str();
    CLI::Option* split_seed_opt = eval_cmd->add_option(
        "--split-seed", eval_opts.split_seed, "split seed (default derived from --seed)");
    eval_cmd->add_flag("--full", eval_opts.full, "score the whole corpus instead");
    eval_cmd->add_option("--format", eval_opts.format, "report format: json, csv or md")
        ->capture_default_str();
    add_scorer_options(eval_cmd, eval_opts.scorers);
    eval_cmd->add_option("--out", eval_opts.out, "run directory")->capture_default_str();

    CLI::App* predict_cmd = app.add_subcommand("predict", "classify text or a post file");
    predict_cmd->add_option("--checkpoint", predict_opts.checkpoint,
                            "checkpoint directory");
    predict_cmd->add_flag("--untrained", predict_opts.untrained,
                          "zero-weight model instead of a checkpoint");
    CLI::Option* text_opt =
        predict_cmd->add_option("--text", predict_opts.text, "free text to classify");
    predict_cmd->add_option("--input", predict_opts.input, "corpus file to classify");
    add_model_options(predict_cmd, predict_opts.model);
    add_scorer_options(predict_cmd, predict_opts.scorers);
    predict_cmd->add_option("--out", predict_opts.out, "run directory")
        ->capture_default_str();

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "train every cell of a config grid");
    ablate_cmd->add_option("--corpus", ablate_opts.corpus, "training corpus")->required();
    ablate_cmd->add_option("--k", ablate_opts.k, "pooled-layer counts")->delimiter(',');
    ablate_cmd->add_option("--heads", ablate_opts.heads, "heads to sweep")->delimiter(',');
    ablate_cmd->add_option("--encoders", ablate_opts.encoders, "encoder specs to sweep")
        ->delimiter(',');
    ablate_cmd->add_option("--augmentation", ablate_opts.augmentation,
                           "augmentation axis: off, on or off,on")
        ->delimiter(',');
    ablate_cmd->add_option("--aug-rate", ablate_opts.aug_rate, "augmentation edit rate")
        ->capture_default_str();
    ablate_cmd->add_option("--aug-counts", ablate_opts.aug_counts,
                           "augmentation draws per class (default: balance toward the "
                           "majority)")
        ->delimiter(',');
    ablate_cmd->add_option("--head-hidden", ablate_opts.head_hidden, "head hidden width")
        ->capture_default_str();
    ablate_cmd->add_option("--dropout", ablate_opts.dropout, "dropout on the fused vector")
        ->capture_default_str();
    ablate_cmd->add_option("--features", ablate_opts.preset, "feature preset")
        ->capture_default_str();
    add_trainer_options(ablate_cmd, ablate_opts.trainer);
    add_scorer_options(ablate_cmd, ablate_opts.scorers);
    ablate_cmd->add_option("--out", ablate_opts.out, "run directory")
        ->capture_default_str();

    CLI::App* report_cmd = app.add_subcommand("report", "render stored metrics");
    report_cmd->add_option("--input", report_opts.input, "metrics or summary JSON")
        ->required();
    report_cmd->add_option("--format", report_opts.format, "json, csv or md")
        ->capture_default_str();
    report_cmd->add_option("--output", report_opts.output, "write here instead of stdout");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("depsev");
    for (const std::string& arg : args) argv.push_back(arg.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (prep_cmd->parsed()) return cmd_prep(global, prep_opts, out, err);
        if (features_cmd->parsed()) return cmd_features(global, feature_opts, out, err);
        if (augment_cmd->parsed()) return cmd_augment(global, augment_opts, out, err);
        if (train_cmd->parsed()) return cmd_train(global, train_opts, out, err);
        if (eval_cmd->parsed()) {
            if (split_seed_opt->count() == 0) {
                eval_opts.split_seed = stage_seed(global.seed, "split");
            }
            return cmd_evaluate(global, eval_opts, out, err);
        }
        if (predict_cmd->parsed()) {
            return cmd_predict(global, predict_opts, text_opt->count() > 0, out, err);
        }
        if (ablate_cmd->parsed()) return cmd_ablate(global, ablate_opts, out, err);
        if (report_cmd->parsed()) return cmd_report(global, report_opts, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const RuntimeError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace depsev
