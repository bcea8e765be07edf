#pragma once

#include <string>
#include <vector>

#include "depsev/corpus.hpp"
#include "depsev/evaluator.hpp"
#include "depsev/features.hpp"
#include "depsev/model.hpp"

namespace depsev {

// ─── Configuration ──────────────────────────────────────────────────────────

struct TrainConfig {
    int epochs = 11;
    int batch_size = 8;
    double learning_rate = 1e-5;
    double train_fraction = 0.8;
    int runs = 5;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    /// Each run gets its own stratified split; off reuses the first seed's.
    bool resplit_per_run = true;
    /// Keep the epoch with the best eval F1 instead of the last one.
    bool select_best_epoch = false;
    /// A trained model is saved here when non-empty.
    std::string checkpoint_dir;

    void validate() const;
};

struct RunHistory {
    std::vector<double> train_loss;
    /// Weighted F1 per epoch; filled only when an eval set is provided.
    std::vector<double> eval_f1;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

// ─── Samples ────────────────────────────────────────────────────────────────

struct TrainSample {
    std::vector<int> token_ids;
    Eigen::VectorXd features;
    int label = 0;
};

/// Pairs every post with its cached feature row and token ids. Schema drift
/// or a missing row fails here, before any training step runs.
std::vector<TrainSample> build_samples(const Corpus& corpus, const FeatureCache& cache,
                                       const ModelConfig& model_config);

// ─── Optimizer ──────────────────────────────────────────────────────────────

class AdamOptimizer {
  public:
    explicit AdamOptimizer(std::vector<std::pair<std::string, ad::Var>> params,
                           double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8);

    /// Applies one bias-corrected update from the accumulated gradients;
    /// parameters without a gradient are left alone.
    void step();
    void zero_grad();

  private:
    struct Slot {
        ad::Var param;
        Eigen::MatrixXd m;
        Eigen::MatrixXd v;
    };
    std::vector<Slot> slots_;
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long step_count_ = 0;
};

// ─── Training ───────────────────────────────────────────────────────────────

/// Minimizes mean cross-entropy over seeded epoch shuffles. A non-finite
/// batch loss aborts with a diagnostic; a checkpoint is written at the end
/// when the config names a directory.
RunHistory train(Classifier& model, const std::vector<TrainSample>& samples,
                 const TrainConfig& config, std::uint64_t seed,
                 const std::vector<TrainSample>* eval_samples = nullptr);

struct ExperimentRun {
    RunHistory history;
    MetricsReport metrics;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    std::vector<ExperimentRun> runs;
    RunSummary summary;
};

/// Trains config.runs models with distinct seeds, scores each on its test
/// split and aggregates the weighted metrics.
ExperimentResult run_experiment(const ModelConfig& model_config, const TrainConfig& config,
                                const Corpus& corpus, const FeatureCache& cache);

}  // namespace depsev
