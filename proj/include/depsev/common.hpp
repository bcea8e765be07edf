#pragma once

#include <cctype>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace depsev {

// ─── Errors ─────────────────────────────────────────────────────────────────
//
// Two families: ValidationError covers bad user input (malformed files,
// out-of-range arguments, unknown config keys) and maps to exit code 1;
// RuntimeError covers failures of an otherwise valid run (divergence, I/O
// mid-run) and maps to exit code 2.

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class RuntimeError : public Error {
  public:
    using Error::Error;
};

class SchemaError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class ArgumentError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class EmptyCorpusError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class PlanError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class StaleCacheError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class FeatureError : public RuntimeError {
  public:
    using RuntimeError::RuntimeError;
};

class AugmentError : public RuntimeError {
  public:
    using RuntimeError::RuntimeError;
};

class EncodeError : public RuntimeError {
  public:
    using RuntimeError::RuntimeError;
};

class TrainingError : public RuntimeError {
  public:
    using RuntimeError::RuntimeError;
};

class InferenceError : public RuntimeError {
  public:
    using RuntimeError::RuntimeError;
};

// ─── Hashing ────────────────────────────────────────────────────────────────

/// FNV-1a over bytes. Used for content hashes, cache keys and seed derivation.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Stable seed mixing (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// ─── Deterministic RNG helpers ──────────────────────────────────────────────
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not. These helpers keep draws bit-identical across
// standard libraries.

using Rng = std::mt19937_64;

/// Uniform integer in [0, n), n >= 1.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

/// Uniform real in [0, 1).
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates with explicit draws; same permutation on every platform.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[uniform_index(rng, i)]);
    }
}

// ─── Small string utilities ─────────────────────────────────────────────────

/// Decodes one codepoint at `i`; on malformed input consumes a single byte
/// and returns it verbatim so text processing stays total.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return b0;
    }
    if (i + len > s.size()) {
        ++i;
        return b0;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

inline bool is_unicode_space(char32_t cp) {
    return cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200B) ||
           cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x3000;
}

inline bool is_space_codepoint(char32_t cp) {
    return (cp < 0x80 && std::isspace(static_cast<int>(cp))) || is_unicode_space(cp);
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

/// Whitespace tokenization (ASCII or Unicode spaces); the shared convention
/// for cleaning, augmentation and the hash tokenizer.
std::vector<std::string> split_whitespace(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

/// Hex rendering of a 64-bit hash, for cache keys and manifests.
std::string hash_hex(std::uint64_t h);

}  // namespace depsev
