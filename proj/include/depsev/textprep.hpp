#pragma once

#include <map>
#include <string>
#include <vector>

namespace depsev {

// ─── Cleaning pipeline ──────────────────────────────────────────────────────
//
// Canonical application order. Expansion runs before punctuation stripping
// so "can't" becomes "cannot", never "cant".

enum class CleanStep {
    strip_html,
    strip_urls,
    strip_mentions,
    strip_emoji,
    lowercase,
    expand_contractions,
    strip_punct,
    collapse_whitespace,
};

inline constexpr int kNumCleanSteps = 8;

const char* clean_step_name(CleanStep step);

/// Parses a step identifier; throws ConfigError on unknown names.
CleanStep parse_clean_step(const std::string& name);

using ContractionTable = std::map<std::string, std::string>;

struct CleaningConfig {
    /// Enabled steps; must be a subsequence of the canonical order above.
    std::vector<CleanStep> steps;
    ContractionTable contraction_table;

    /// All eight steps with the given table.
    static CleaningConfig all_steps(ContractionTable table = {});

    /// Throws ConfigError if steps are out of canonical order or repeated,
    /// or if a table key is not lowercase.
    void validate() const;

    std::uint64_t config_hash() const;
};

/// Two-column CSV contraction,expansion (UTF-8, optional header).
ContractionTable load_contraction_table(const std::string& path);

/// Applies the enabled steps in canonical order. Total and idempotent.
std::string clean(const std::string& text, const CleaningConfig& config);

/// Whole-token expansion. Tokens are compared after normalizing curly
/// apostrophes, and fall back to a punctuation-stripped lookup so a later
/// punctuation pass cannot resurrect a table key.
std::string expand_contractions(const std::string& text, const ContractionTable& table);

}  // namespace depsev
