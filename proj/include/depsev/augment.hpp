#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "depsev/corpus.hpp"
#include "depsev/encoder.hpp"

namespace depsev {

// ─── Masked token prediction ────────────────────────────────────────────────

/// Proposes fill-ins for a masked position. The token list handed to predict
/// carries kMaskToken at mask_index; candidates come back best first.
class MaskedTokenPredictor {
  public:
    virtual ~MaskedTokenPredictor() = default;

    virtual std::string name() const = 0;
    virtual std::vector<std::string> predict(const std::vector<std::string>& tokens,
                                             std::size_t mask_index,
                                             std::size_t top_k) const = 0;
};

/// Context-hashed draws from a fixed filler pool. Candidates are distinct by
/// construction and depend on the surrounding tokens and mask position.
class HashMaskedTokenPredictor : public MaskedTokenPredictor {
  public:
    std::string name() const override { return "stub"; }
    std::vector<std::string> predict(const std::vector<std::string>& tokens,
                                     std::size_t mask_index,
                                     std::size_t top_k) const override;
};

/// Ranks a candidate word list by the encoder's tied-embedding logits at the
/// masked row. A mask that falls past the encoder's token budget is scored
/// from the leading [CLS] row instead.
class EncoderMaskedPredictor : public MaskedTokenPredictor {
  public:
    EncoderMaskedPredictor(std::shared_ptr<const TransformerEncoder> encoder,
                           std::vector<std::string> candidates);

    std::string name() const override { return "encoder"; }
    std::vector<std::string> predict(const std::vector<std::string>& tokens,
                                     std::size_t mask_index,
                                     std::size_t top_k) const override;

  private:
    std::shared_ptr<const TransformerEncoder> encoder_;
    HashTokenizer tokenizer_;
    std::vector<std::string> candidates_;
};

// ─── Augmentation operations ────────────────────────────────────────────────

/// Inserts ceil(rate * tokens) predicted words at distinct gaps. Every
/// proposal is conditioned on the original token sequence.
std::string contextual_insert(const std::string& text, double rate,
                              const MaskedTokenPredictor& predictor, Rng& rng);

/// Replaces ceil(rate * tokens) distinct tokens with the first candidate
/// that differs from the original; a position with no differing candidate
/// keeps its token.
std::string contextual_substitute(const std::string& text, double rate,
                                  const MaskedTokenPredictor& predictor, Rng& rng);

// ─── Corpus-level augmentation ──────────────────────────────────────────────

struct AugmentationPlan {
    /// Original posts to draw per class, indexed by label.
    std::array<int, kNumLabels> counts{};
    double rate = 0.15;
    int copies = 1;
    std::uint64_t seed = 0;

    static AugmentationPlan defaults();

    /// Checks the plan against a corpus; throws PlanError.
    void validate(const Corpus& corpus) const;
};

/// Seeded draw of `count` original posts of the given label, returned as
/// ascending indices into corpus.posts.
std::vector<std::size_t> select_pool(const Corpus& corpus, int label, int count, Rng& rng);

struct AugmentResult {
    Corpus corpus;
    std::vector<std::string> warnings;
};

/// Appends augmented rows class by class. Each drawn post yields plan.copies
/// rows with ids "<parent>_aug<copy>"; the operation per row is a seeded
/// coin flip between insertion and substitution.
AugmentResult augment_corpus(const Corpus& corpus, const AugmentationPlan& plan,
                             const MaskedTokenPredictor& predictor);

}  // namespace depsev
