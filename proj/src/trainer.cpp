#include "depsev/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>

#include "depsev/checkpoint.hpp"
#include "depsev/common.hpp"

namespace depsev {

// ─── Configuration ──────────────────────────────────────────────────────────

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ConfigError("epochs must be at least 1, got " + std::to_string(epochs));
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be at least 1, got " + std::to_string(batch_size));
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive, got " +
                          std::to_string(learning_rate));
    }
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1, got " +
                          std::to_string(train_fraction));
    }
    if (runs < 1) {
        throw ConfigError("runs must be at least 1, got " + std::to_string(runs));
    }
    if (seeds.size() != static_cast<std::size_t>(runs)) {
        throw ConfigError("expected one seed per run: " + std::to_string(runs) +
                          " runs but " + std::to_string(seeds.size()) + " seeds");
    }
}

// ─── Samples ────────────────────────────────────────────────────────────────

std::vector<TrainSample> build_samples(const Corpus& corpus, const FeatureCache& cache,
                                       const ModelConfig& model_config) {
    const std::vector<std::string> expected = feature_names(model_config.features);
    if (cache.meta.schema != expected) {
        throw SchemaError("feature cache schema does not match preset '" +
                          std::string(feature_preset_name(model_config.features)) + "'");
    }

    std::unordered_map<std::string, Eigen::Index> row_of;
    row_of.reserve(cache.ids.size());
    for (std::size_t i = 0; i < cache.ids.size(); ++i) {
        row_of.emplace(cache.ids[i], static_cast<Eigen::Index>(i));
    }

    const HashTokenizer tokenizer(model_config.encoder.vocab_size);
    std::vector<TrainSample> samples;
    samples.reserve(corpus.posts.size());
    for (const Post& post : corpus.posts) {
        const auto it = row_of.find(post.id);
        if (it == row_of.end()) {
            throw FeatureError("no cached features for post '" + post.id + "'");
        }
        TrainSample sample;
        sample.token_ids = tokenizer.encode(post.text, model_config.encoder.max_tokens);
        sample.features = cache.features.row(it->second).transpose();
        sample.label = post.label;
        samples.push_back(std::move(sample));
    }
    return samples;
}

// ─── Optimizer ──────────────────────────────────────────────────────────────

AdamOptimizer::AdamOptimizer(std::vector<std::pair<std::string, ad::Var>> params,
                             double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(learning_rate > 0.0)) {
        throw ArgumentError("learning rate must be positive");
    }
    slots_.reserve(params.size());
    for (auto& [name, param] : params) {
        (void)name;
        Slot slot;
        slot.param = param;
        slot.m = Eigen::MatrixXd::Zero(param->value.rows(), param->value.cols());
        slot.v = Eigen::MatrixXd::Zero(param->value.rows(), param->value.cols());
        slots_.push_back(std::move(slot));
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (Slot& slot : slots_) {
        // A parameter outside the last graph has nothing to contribute.
        if (!slot.param->has_grad()) {
            continue;
        }
        const Eigen::MatrixXd& grad = slot.param->grad;
        slot.m = beta1_ * slot.m + (1.0 - beta1_) * grad;
        slot.v = beta2_ * slot.v + (1.0 - beta2_) * grad.cwiseProduct(grad);
        slot.param->value.array() -=
            lr_ * (slot.m.array() / correction1) /
            ((slot.v.array() / correction2).sqrt() + eps_);
    }
}

void AdamOptimizer::zero_grad() {
    for (Slot& slot : slots_) {
        ad::clear_grad(slot.param);
    }
}

// ─── Training ───────────────────────────────────────────────────────────────

namespace {

double weighted_f1_of(Classifier& model, const std::vector<TrainSample>& samples,
                      MetricsReport* out = nullptr) {
    std::vector<int> predictions;
    std::vector<int> truth;
    predictions.reserve(samples.size());
    truth.reserve(samples.size());
    for (const TrainSample& sample : samples) {
        predictions.push_back(model.predict(sample.token_ids, sample.features));
        truth.push_back(sample.label);
    }
    MetricsReport report = evaluate(predictions, truth);
    const double f1 = report.weighted_f1;
    if (out != nullptr) {
        *out = std::move(report);
    }
    return f1;
}

}  // namespace

RunHistory train(Classifier& model, const std::vector<TrainSample>& samples,
                 const TrainConfig& config, std::uint64_t seed,
                 const std::vector<TrainSample>* eval_samples) {
    config.validate();
    if (samples.empty()) {
        throw ArgumentError("cannot train on an empty sample set");
    }
    if (config.select_best_epoch && eval_samples == nullptr) {
        throw ConfigError("select_best_epoch requires an eval set");
    }

    const auto start = std::chrono::steady_clock::now();
    RunHistory history;
    history.seed = seed;
    history.train_loss.reserve(config.epochs);

    AdamOptimizer optimizer(model.trainable_parameters(), config.learning_rate);
    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double best_f1 = -1.0;
    std::map<std::string, Eigen::MatrixXd> best_weights;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch) + 1));
        deterministic_shuffle(order, rng);

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            const std::size_t end = std::min(order.size(), begin + batch_size);
            ad::Var batch_loss;
            for (std::size_t i = begin; i < end; ++i) {
                const TrainSample& sample = samples[order[i]];
                const ad::Var item =
                    model.loss(sample.token_ids, sample.features, sample.label, true);
                batch_loss = batch_loss ? ad::add(batch_loss, item) : item;
            }
            const double batch_n = static_cast<double>(end - begin);
            batch_loss = ad::scale(batch_loss, 1.0 / batch_n);

            const double value = batch_loss->value(0, 0);
            if (!std::isfinite(value)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                    ", batch " + std::to_string(begin / batch_size + 1) +
                                    "; lower the learning rate");
            }
            optimizer.zero_grad();
            ad::backward(batch_loss);
            optimizer.step();
            loss_sum += value * batch_n;
        }
        history.train_loss.push_back(loss_sum / static_cast<double>(samples.size()));

        if (eval_samples != nullptr) {
            const double f1 = weighted_f1_of(model, *eval_samples);
            history.eval_f1.push_back(f1);
            if (config.select_best_epoch && f1 > best_f1) {
                best_f1 = f1;
                best_weights.clear();
                for (const auto& [name, param] : model.trainable_parameters()) {
                    best_weights[name] = param->value;
                }
            }
        }
    }

    if (config.select_best_epoch && !best_weights.empty()) {
        for (const auto& [name, param] : model.trainable_parameters()) {
            param->value = best_weights.at(name);
        }
    }

    history.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!config.checkpoint_dir.empty()) {
        save_checkpoint(model, config.checkpoint_dir);
    }
    return history;
}

ExperimentResult run_experiment(const ModelConfig& model_config, const TrainConfig& config,
                                const Corpus& corpus, const FeatureCache& cache) {
    model_config.validate();
    config.validate();

    ExperimentResult result;
    result.runs.reserve(config.runs);
    std::vector<MetricsReport> reports;
    reports.reserve(config.runs);

    for (int i = 0; i < config.runs; ++i) {
        const std::uint64_t seed = config.seeds[static_cast<std::size_t>(i)];
        const std::uint64_t split_seed = config.resplit_per_run ? seed : config.seeds.front();
        const Split parts = split(corpus, config.train_fraction, split_seed);
        const std::vector<TrainSample> train_samples =
            build_samples(parts.train, cache, model_config);
        const std::vector<TrainSample> test_samples =
            build_samples(parts.test, cache, model_config);

        TrainConfig run_config = config;
        if (!config.checkpoint_dir.empty()) {
            run_config.checkpoint_dir =
                config.checkpoint_dir + "/run" + std::to_string(i + 1);
        }

        // The test split must reach evaluation exactly as it left the split.
        const std::uint64_t test_fingerprint = corpus_hash(parts.test);

        Classifier model(model_config, seed);
        ExperimentRun run;
        run.seed = seed;
        run.history = train(model, train_samples, run_config, seed, &test_samples);

        if (corpus_hash(parts.test) != test_fingerprint) {
            throw TrainingError("test split of run " + std::to_string(i + 1) +
                                " changed during training");
        }
        weighted_f1_of(model, test_samples, &run.metrics);
        reports.push_back(run.metrics);
        result.runs.push_back(std::move(run));
    }
    result.summary = summarize_runs(reports);
    return result;
}

}  // namespace depsev
