#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "depsev/checkpoint.hpp"
#include "depsev/common.hpp"
#include "depsev/trainer.hpp"

namespace fs = std::filesystem;
using namespace depsev;

namespace {

// Four disjoint vocabularies so the encoder sees class-distinct token
// streams; one feature column per class carries the same signal.
struct Fixture {
    Corpus corpus;
    FeatureCache cache;
};

Fixture make_fixture(int per_class) {
    const std::array<const char*, kNumLabels> vocab = {
        "calm steady fine okay bright", "worn tired low flat dull",
        "heavy sad dark numb hollow", "broken empty lost alone done"};
    Fixture fx;
    const int n = per_class * kNumLabels;
    fx.cache.features = Eigen::MatrixXd::Zero(n, feature_dim(FeaturePreset::emotion28_sent3));
    Rng noise(123);
    for (int i = 0; i < n; ++i) {
        const int label = i % kNumLabels;
        Post post;
        post.id = "p" + std::to_string(i);
        post.text = std::string(vocab[label]) + " t" + std::to_string(i);
        post.label = label;
        fx.corpus.posts.push_back(post);
        fx.cache.ids.push_back(post.id);
        for (Eigen::Index j = 0; j < fx.cache.features.cols(); ++j) {
            fx.cache.features(i, j) = 0.05 * uniform_real(noise);
        }
        fx.cache.features(i, label) = 1.0;
    }
    fx.cache.meta.schema = feature_names(FeaturePreset::emotion28_sent3);
    fx.cache.meta.preset = feature_preset_name(FeaturePreset::emotion28_sent3);
    fx.cache.meta.config_hash = "test";
    return fx;
}

ModelConfig smoke_model() {
    ModelConfig config = ModelConfig::toy();
    config.head_hidden = 64;
    config.dropout = 0.0;
    return config;
}

TrainConfig quick_train(int epochs, double learning_rate = 3e-3) {
    TrainConfig config;
    config.epochs = epochs;
    config.batch_size = 8;
    config.learning_rate = learning_rate;
    config.runs = 1;
    config.seeds = {0};
    return config;
}

double train_accuracy(Classifier& model, const std::vector<TrainSample>& samples) {
    int correct = 0;
    for (const TrainSample& sample : samples) {
        if (model.predict(sample.token_ids, sample.features) == sample.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("train config validation") {
    CHECK_NOTHROW(TrainConfig{}.validate());
    TrainConfig config;
    SUBCASE("epochs") { config.epochs = 0; }
    SUBCASE("batch size") { config.batch_size = 0; }
    SUBCASE("learning rate") { config.learning_rate = 0.0; }
    SUBCASE("fraction low") { config.train_fraction = 0.0; }
    SUBCASE("fraction high") { config.train_fraction = 1.0; }
    SUBCASE("runs") { config.runs = 0; }
    SUBCASE("seed count") { config.seeds = {1, 2}; }
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("build samples pairs posts with cached rows") {
    const Fixture fx = make_fixture(2);
    const ModelConfig config = smoke_model();
    const auto samples = build_samples(fx.corpus, fx.cache, config);

    REQUIRE(samples.size() == fx.corpus.posts.size());
    const HashTokenizer tokenizer(config.encoder.vocab_size);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].label == fx.corpus.posts[i].label);
        CHECK(samples[i].token_ids ==
              tokenizer.encode(fx.corpus.posts[i].text, config.encoder.max_tokens));
        CHECK(samples[i].features.size() == fx.cache.features.cols());
        CHECK((samples[i].features.transpose() - fx.cache.features.row(i)).norm() == 0.0);
    }
}

TEST_CASE("build samples rejects schema drift and missing rows") {
    Fixture fx = make_fixture(2);
    const ModelConfig config = smoke_model();

    SUBCASE("renamed column") {
        fx.cache.meta.schema[0] = "emotion_renamed";
        CHECK_THROWS_AS(build_samples(fx.corpus, fx.cache, config), SchemaError);
    }
    SUBCASE("wrong preset") {
        ModelConfig med = config;
        med.features = FeaturePreset::emotion28_sent3_med;
        CHECK_THROWS_AS(build_samples(fx.corpus, fx.cache, med), SchemaError);
    }
    SUBCASE("post without features") {
        fx.corpus.posts.push_back({"stray", "text with no cached row", 0,
                                   Origin::original, std::nullopt});
        CHECK_THROWS_AS(build_samples(fx.corpus, fx.cache, config), FeatureError);
    }
}

TEST_CASE("training records one loss per epoch") {
    const Fixture fx = make_fixture(3);
    const auto samples = build_samples(fx.corpus, fx.cache, smoke_model());
    Classifier model(smoke_model(), 1);

    const RunHistory history = train(model, samples, quick_train(3), 17);
    CHECK(history.train_loss.size() == 3);
    CHECK(history.eval_f1.empty());
    CHECK(history.wall_seconds > 0.0);
    CHECK(history.seed == 17);
    for (double loss : history.train_loss) CHECK(std::isfinite(loss));

    CHECK_THROWS_AS(train(model, {}, quick_train(1), 0), ArgumentError);
    TrainConfig best = quick_train(1);
    best.select_best_epoch = true;
    CHECK_THROWS_AS(train(model, samples, best, 0), ConfigError);
}

TEST_CASE("overfit smoke: a small head memorizes a separable corpus") {
    const Fixture fx = make_fixture(8);
    const auto samples = build_samples(fx.corpus, fx.cache, smoke_model());
    REQUIRE(samples.size() == 32);

    Classifier model(smoke_model(), 1);
    const RunHistory history = train(model, samples, quick_train(60), 17);

    CHECK(history.train_loss.front() > history.train_loss.back());
    CHECK(history.train_loss.back() < 0.1);
    CHECK(train_accuracy(model, samples) >= 0.95);
}

TEST_CASE("training is reproducible for a fixed seed pair") {
    const Fixture fx = make_fixture(3);
    ModelConfig model_config = smoke_model();
    model_config.dropout = 0.1;
    const auto samples = build_samples(fx.corpus, fx.cache, model_config);
    const TrainConfig config = quick_train(2, 1e-3);

    Classifier a(model_config, 9);
    Classifier b(model_config, 9);
    const RunHistory ha = train(a, samples, config, 17);
    const RunHistory hb = train(b, samples, config, 17);
    REQUIRE(ha.train_loss.size() == hb.train_loss.size());
    for (std::size_t i = 0; i < ha.train_loss.size(); ++i) {
        CHECK(std::abs(ha.train_loss[i] - hb.train_loss[i]) <= 1e-9);
    }

    Classifier c(model_config, 9);
    const RunHistory hc = train(c, samples, config, 18);
    CHECK(ha.train_loss.back() != hc.train_loss.back());
}

TEST_CASE("a runaway learning rate fails loudly") {
    const Fixture fx = make_fixture(2);
    const auto samples = build_samples(fx.corpus, fx.cache, smoke_model());
    Classifier model(smoke_model(), 1);
    CHECK_THROWS_AS(train(model, samples, quick_train(2, 1e150), 17), TrainingError);
}

TEST_CASE("experiment aggregates per-seed runs") {
    const Fixture fx = make_fixture(10);
    const ModelConfig model_config = smoke_model();

    TrainConfig config = quick_train(2);
    config.runs = 2;
    config.seeds = {0, 1};

    const ExperimentResult result = run_experiment(model_config, config, fx.corpus, fx.cache);
    REQUIRE(result.runs.size() == 2);
    for (int i = 0; i < 2; ++i) {
        const ExperimentRun& run = result.runs[static_cast<std::size_t>(i)];
        CHECK(run.seed == config.seeds[static_cast<std::size_t>(i)]);
        CHECK(run.history.train_loss.size() == 2);
        CHECK(run.history.eval_f1.size() == 2);
        CHECK(run.metrics.total == 8);
    }
    CHECK(result.summary.runs.size() == 2);
    CHECK(result.summary.weighted_f1.std >= 0.0);
    const double mean =
        (result.runs[0].metrics.weighted_f1 + result.runs[1].metrics.weighted_f1) / 2.0;
    CHECK(result.summary.weighted_f1.mean == doctest::Approx(mean).epsilon(1e-12));

    config.runs = 1;
    config.seeds = {0};
    const ExperimentResult single = run_experiment(model_config, config, fx.corpus, fx.cache);
    CHECK(single.summary.weighted_f1.std == 0.0);
    CHECK(single.summary.weighted_f1.mean ==
          doctest::Approx(single.runs[0].metrics.weighted_f1).epsilon(1e-12));
}

TEST_CASE("best epoch selection restores the strongest weights") {
    const Fixture fx = make_fixture(8);
    const ModelConfig model_config = smoke_model();
    const Split parts = split(fx.corpus, 0.75, 5);
    const auto train_samples = build_samples(parts.train, fx.cache, model_config);
    const auto test_samples = build_samples(parts.test, fx.cache, model_config);

    TrainConfig config = quick_train(8);
    config.select_best_epoch = true;

    Classifier model(model_config, 2);
    const RunHistory history = train(model, train_samples, config, 17, &test_samples);
    REQUIRE(history.eval_f1.size() == 8);

    std::vector<int> predictions;
    std::vector<int> truth;
    for (const TrainSample& sample : test_samples) {
        predictions.push_back(model.predict(sample.token_ids, sample.features));
        truth.push_back(sample.label);
    }
    const double restored_f1 = evaluate(predictions, truth).weighted_f1;
    const double best_f1 = *std::max_element(history.eval_f1.begin(), history.eval_f1.end());
    CHECK(restored_f1 == doctest::Approx(best_f1).epsilon(1e-12));
}

TEST_CASE("training can persist a checkpoint") {
    const Fixture fx = make_fixture(3);
    const ModelConfig model_config = smoke_model();
    const auto samples = build_samples(fx.corpus, fx.cache, model_config);

    const fs::path dir = fs::temp_directory_path() / "depsev_train_ckpt";
    fs::remove_all(dir);
    TrainConfig config = quick_train(2);
    config.checkpoint_dir = dir.string();

    Classifier model(model_config, 4);
    train(model, samples, config, 17);
    REQUIRE(fs::exists(dir / "weights.bin"));

    Classifier loaded = load_checkpoint(dir.string());
    for (const TrainSample& sample : samples) {
        CHECK(loaded.predict(sample.token_ids, sample.features) ==
              model.predict(sample.token_ids, sample.features));
    }
}

TEST_CASE("experiment writes one checkpoint per run") {
    const Fixture fx = make_fixture(5);
    const fs::path dir = fs::temp_directory_path() / "depsev_exp_ckpt";
    fs::remove_all(dir);

    TrainConfig config = quick_train(1);
    config.runs = 2;
    config.seeds = {0, 1};
    config.checkpoint_dir = dir.string();

    run_experiment(smoke_model(), config, fx.corpus, fx.cache);
    CHECK(fs::exists(dir / "run1" / "weights.bin"));
    CHECK(fs::exists(dir / "run2" / "weights.bin"));
}
