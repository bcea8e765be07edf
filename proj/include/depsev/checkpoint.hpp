#pragma once

#include <string>

#include "depsev/evaluator.hpp"
#include "depsev/model.hpp"

namespace depsev {

// ─── Checkpoints ────────────────────────────────────────────────────────────
//
// A checkpoint is a directory: model.json holds the model configuration,
// feature schema and class names, weights.bin every named tensor, and
// metrics.json an optional evaluation snapshot. Loading refuses to touch a
// weights file whose feature schema does not hash-match the current library.

/// Chained hash over the preset's feature names, rendered by hash_hex.
std::uint64_t feature_schema_hash(FeaturePreset preset);

void save_checkpoint(const Classifier& model, const std::string& dir,
                     const MetricsReport* metrics = nullptr);

Classifier load_checkpoint(const std::string& dir);

}  // namespace depsev
