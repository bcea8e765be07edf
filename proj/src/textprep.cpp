#include "depsev/textprep.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <sstream>

#include "depsev/common.hpp"
#include "depsev/csv.hpp"

namespace depsev {
namespace {

// Block-range approximation of the emoji property: pictograph planes,
// misc symbols and dingbats, symbols-and-arrows, plus the joiners and
// modifiers that only occur inside emoji sequences.
bool is_emoji_codepoint(char32_t cp) {
    return (cp >= 0x1F000 && cp <= 0x1FAFF) ||
           (cp >= 0x2600 && cp <= 0x27BF) ||
           (cp >= 0x2B00 && cp <= 0x2BFF) ||
           cp == 0xFE0E || cp == 0xFE0F ||
           cp == 0x200D || cp == 0x20E3;
}

bool is_unicode_punct(char32_t cp) {
    static constexpr std::array<char32_t, 16> extra = {
        0x2018, 0x2019, 0x201A, 0x201B, 0x201C, 0x201D, 0x201E,
        0x2013, 0x2014, 0x2015, 0x2026, 0x00A1, 0x00BF, 0x00AB,
        0x00BB, 0x00B4};
    if (cp < 0x80) return std::ispunct(static_cast<unsigned char>(cp)) != 0;
    for (char32_t e : extra)
        if (cp == e) return true;
    return false;
}

bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// ─── Individual steps ───────────────────────────────────────────────────────

// Removes complete tags whose first character marks them as markup; a "<"
// followed by anything else (comparisons, "<3") survives for the
// punctuation pass. Runs to a fixpoint so nested leftovers cannot expose
// a fresh tag to a second cleaning.
std::string strip_html_once(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<' && i + 1 < text.size()) {
            char next = text[i + 1];
            bool tagish = std::isalpha(static_cast<unsigned char>(next)) ||
                          next == '/' || next == '!';
            if (tagish) {
                std::size_t close = text.find_first_of("<>", i + 1);
                if (close != std::string::npos && text[close] == '>') {
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

template <typename Step>
std::string to_fixpoint(std::string text, Step step) {
    for (;;) {
        std::string next = step(text);
        if (next == text) return text;
        text = std::move(next);
    }
}

std::string step_strip_html(const std::string& text) {
    return to_fixpoint(text, strip_html_once);
}

bool has_prefix_ci(const std::string& token, const char* prefix) {
    std::size_t n = std::char_traits<char>::length(prefix);
    if (token.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (std::tolower(static_cast<unsigned char>(token[i])) != prefix[i]) return false;
    return true;
}

bool is_url_token(const std::string& token) {
    return has_prefix_ci(token, "http://") || has_prefix_ci(token, "https://") ||
           has_prefix_ci(token, "www.");
}

bool is_name_char(char c, bool allow_dash) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           (allow_dash && c == '-');
}

// u/NAME, /u/NAME, r/NAME, /r/NAME, @NAME; trailing punctuation is part of
// the mention so "u/someone," disappears whole.
bool is_mention_token(const std::string& token) {
    std::size_t i = 0;
    bool allow_dash = true;
    if (i < token.size() && token[i] == '@') {
        ++i;
        allow_dash = false;
    } else {
        if (i < token.size() && token[i] == '/') ++i;
        if (i >= token.size()) return false;
        char c = std::tolower(static_cast<unsigned char>(token[i]));
        if (c != 'u' && c != 'r') return false;
        ++i;
        if (i >= token.size() || token[i] != '/') return false;
        ++i;
    }
    std::size_t name_start = i;
    while (i < token.size() && is_name_char(token[i], allow_dash)) ++i;
    if (i == name_start) return false;
    while (i < token.size() && is_ascii_punct(token[i])) ++i;
    return i == token.size();
}

template <typename Keep>
std::string filter_tokens(const std::string& text, Keep keep) {
    std::vector<std::string> kept;
    for (auto& token : split_whitespace(text))
        if (keep(token)) kept.push_back(token);
    return join_tokens(kept);
}

std::string step_strip_urls(const std::string& text) {
    return filter_tokens(text, [](const std::string& t) { return !is_url_token(t); });
}

std::string step_strip_mentions(const std::string& text) {
    return filter_tokens(text, [](const std::string& t) { return !is_mention_token(t); });
}

// Deleting a codepoint can splice stray bytes around it into a fresh valid
// sequence, so both strip passes iterate to a fixpoint.
std::string strip_emoji_once(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(text, i);
        if (!is_emoji_codepoint(cp)) out.append(text, start, i - start);
    }
    return out;
}

std::string step_strip_emoji(const std::string& text) {
    return to_fixpoint(text, strip_emoji_once);
}

std::string strip_punct_once(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(text, i);
        if (!is_unicode_punct(cp)) out.append(text, start, i - start);
    }
    return out;
}

std::string step_strip_punct(const std::string& text) {
    return to_fixpoint(text, strip_punct_once);
}

std::string step_collapse_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(text, i);
        if (is_space_codepoint(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.append(text, start, i - start);
        }
    }
    return out;
}

std::string normalize_apostrophes(const std::string& token) {
    std::string out;
    out.reserve(token.size());
    std::size_t i = 0;
    while (i < token.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(token, i);
        if (cp == 0x2019 || cp == 0x2018 || cp == 0x00B4)
            out.push_back('\'');
        else
            out.append(token, start, i - start);
    }
    return out;
}

std::string strip_all_punct(const std::string& token) {
    std::string out;
    out.reserve(token.size());
    std::size_t i = 0;
    while (i < token.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(token, i);
        if (!is_unicode_punct(cp)) out.append(token, start, i - start);
    }
    return out;
}

}  // namespace

// ─── Public surface ─────────────────────────────────────────────────────────

const char* clean_step_name(CleanStep step) {
    switch (step) {
        case CleanStep::strip_html: return "strip_html";
        case CleanStep::strip_urls: return "strip_urls";
        case CleanStep::strip_mentions: return "strip_mentions";
        case CleanStep::strip_emoji: return "strip_emoji";
        case CleanStep::lowercase: return "lowercase";
        case CleanStep::expand_contractions: return "expand_contractions";
        case CleanStep::strip_punct: return "strip_punct";
        case CleanStep::collapse_whitespace: return "collapse_whitespace";
    }
    return "unknown";
}

CleanStep parse_clean_step(const std::string& name) {
    for (int i = 0; i < kNumCleanSteps; ++i) {
        auto step = static_cast<CleanStep>(i);
        if (name == clean_step_name(step)) return step;
    }
    throw ConfigError("unknown cleaning step: " + name);
}

CleaningConfig CleaningConfig::all_steps(ContractionTable table) {
    CleaningConfig config;
    for (int i = 0; i < kNumCleanSteps; ++i)
        config.steps.push_back(static_cast<CleanStep>(i));
    config.contraction_table = std::move(table);
    return config;
}

void CleaningConfig::validate() const {
    int previous = -1;
    for (CleanStep step : steps) {
        int rank = static_cast<int>(step);
        if (rank <= previous)
            throw ConfigError(std::string("cleaning steps out of canonical order at ") +
                              clean_step_name(step));
        previous = rank;
    }
    for (const auto& [key, value] : contraction_table) {
        if (key.empty()) throw ConfigError("empty contraction key");
        for (char c : key)
            if (std::isupper(static_cast<unsigned char>(c)))
                throw ConfigError("contraction key not lowercase: " + key);
        if (trim(value).empty())
            throw ConfigError("empty expansion for contraction: " + key);
        for (char c : value)
            if (std::isupper(static_cast<unsigned char>(c)))
                throw ConfigError("expansion not lowercase for: " + key);
    }
    // Expansions must not themselves contain table keys, otherwise a second
    // expansion pass would diverge from the first.
    for (const auto& [key, value] : contraction_table) {
        for (auto& token : split_whitespace(value)) {
            if (contraction_table.count(token))
                throw ConfigError("expansion of '" + key + "' contains key '" + token + "'");
        }
    }
}

std::uint64_t CleaningConfig::config_hash() const {
    std::uint64_t h = fnv1a("cleaning-config");
    for (CleanStep step : steps) h = fnv1a(clean_step_name(step), h);
    for (const auto& [key, value] : contraction_table) {
        h = fnv1a(key, h);
        h = fnv1a(value, h);
    }
    return h;
}

ContractionTable load_contraction_table(const std::string& path) {
    auto rows = csv::read_file(path);
    ContractionTable table;
    std::size_t start = 0;
    if (!rows.empty() && rows[0].size() == 2 && rows[0][0] == "contraction") start = 1;
    for (std::size_t r = start; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        if (row.size() != 2)
            throw ConfigError(path + ": row " + std::to_string(r + 1) +
                              " needs exactly two columns");
        std::string key = trim(row[0]);
        std::string value = trim(row[1]);
        if (key.empty() || value.empty())
            throw ConfigError(path + ": row " + std::to_string(r + 1) +
                              " has an empty field");
        if (!table.emplace(key, value).second)
            throw ConfigError(path + ": duplicate contraction " + key);
    }
    return table;
}

std::string expand_contractions(const std::string& text, const ContractionTable& table) {
    std::vector<std::string> out;
    for (auto& token : split_whitespace(text)) {
        std::size_t lead = 0;
        while (lead < token.size() && is_ascii_punct(token[lead])) ++lead;
        std::size_t tail = token.size();
        while (tail > lead && is_ascii_punct(token[tail - 1])) --tail;
        std::string core = token.substr(lead, tail - lead);
        if (core.empty()) {
            out.push_back(token);
            continue;
        }
        std::string probe = to_lower_ascii(normalize_apostrophes(core));
        auto it = table.find(probe);
        if (it == table.end()) {
            // A punctuation pass downstream would turn e.g. "don.t" into a
            // table key, so match the stripped form now to stay idempotent.
            it = table.find(strip_all_punct(probe));
        }
        std::string replaced = (it != table.end()) ? it->second : core;
        out.push_back(token.substr(0, lead) + replaced + token.substr(tail));
    }
    return join_tokens(out);
}

std::string clean(const std::string& text, const CleaningConfig& config) {
    config.validate();
    std::string cur = text;
    for (CleanStep step : config.steps) {
        switch (step) {
            case CleanStep::strip_html: cur = step_strip_html(cur); break;
            case CleanStep::strip_urls: cur = step_strip_urls(cur); break;
            case CleanStep::strip_mentions: cur = step_strip_mentions(cur); break;
            case CleanStep::strip_emoji: cur = step_strip_emoji(cur); break;
            case CleanStep::lowercase: cur = to_lower_ascii(cur); break;
            case CleanStep::expand_contractions:
                cur = expand_contractions(cur, config.contraction_table);
                break;
            case CleanStep::strip_punct: cur = step_strip_punct(cur); break;
            case CleanStep::collapse_whitespace: cur = step_collapse_whitespace(cur); break;
        }
    }
    return cur;
}

}  // namespace depsev
