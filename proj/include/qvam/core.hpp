#pragma once

/**
 * Core value types for q-valued patterns and keys.
 *
 * A symbol is a color index in [0, q). A pattern is a length-N symbol
 * sequence, a key is a length-n digit sequence identifying a stored pattern
 * in base-q positional form, least significant digit first. Symbols stand
 * for the basis vectors of R^q; all algebra on them is index arithmetic,
 * one-hot vectors are never materialized.
 */

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qvam {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kLibraryVersion = "1.0.0";


/// Color index. Valid values are below the ambient alphabet size q.
using Symbol = std::uint32_t;

namespace detail {

[[noreturn]] inline void fail(const std::string& message) {
    throw std::invalid_argument(message);
}

/// True iff alphabet_size^digits > index (i.e. index is representable).
inline bool digits_cover_index(std::uint32_t alphabet_size, std::uint32_t digits,
                               std::uint64_t index) {
    std::uint64_t cap = 1;
    for (std::uint32_t i = 0; i < digits; ++i) {
        if (cap > std::numeric_limits<std::uint64_t>::max() / alphabet_size) {
            return true;  // cap already exceeds any representable index
        }
        cap *= alphabet_size;
        if (cap > index) {
            return true;
        }
    }
    return cap > index;
}

inline void check_symbols(std::uint32_t alphabet_size, std::span<const Symbol> values,
                          const char* what) {
    if (alphabet_size < 2) {
        fail(std::string(what) + ": alphabet size must be at least 2");
    }
    for (Symbol v : values) {
        if (v >= alphabet_size) {
            fail(std::string(what) + ": symbol value " + std::to_string(v) +
                 " outside alphabet of size " + std::to_string(alphabet_size));
        }
    }
}

}  // namespace detail

/// Length-N sequence of symbols over a fixed alphabet. Immutable once built.
class QPattern {
public:
    QPattern(std::uint32_t alphabet_size, std::vector<Symbol> symbols)
        : alphabet_(alphabet_size), symbols_(std::move(symbols)) {
        detail::check_symbols(alphabet_, symbols_, "QPattern");
    }

    /// Skips symbol validation. Caller guarantees every symbol < alphabet_size.
    static QPattern trusted(std::uint32_t alphabet_size, std::vector<Symbol> symbols) {
        return QPattern(Trusted{}, alphabet_size, std::move(symbols));
    }

    std::uint32_t alphabet_size() const noexcept { return alphabet_; }
    std::size_t length() const noexcept { return symbols_.size(); }
    std::span<const Symbol> symbols() const noexcept { return symbols_; }
    Symbol operator[](std::size_t position) const noexcept { return symbols_[position]; }

    friend bool operator==(const QPattern&, const QPattern&) = default;

private:
    struct Trusted {};
    QPattern(Trusted, std::uint32_t alphabet_size, std::vector<Symbol> symbols) noexcept
        : alphabet_(alphabet_size), symbols_(std::move(symbols)) {}

    std::uint32_t alphabet_;
    std::vector<Symbol> symbols_;
};

/// Length-n digit sequence identifying a pattern, base-q, LSB first.
class KeyVector {
public:
    KeyVector(std::uint32_t alphabet_size, std::vector<Symbol> digits)
        : alphabet_(alphabet_size), digits_(std::move(digits)) {
        detail::check_symbols(alphabet_, digits_, "KeyVector");
        if (digits_.empty()) {
            detail::fail("KeyVector: at least one digit required");
        }
    }

    std::uint32_t alphabet_size() const noexcept { return alphabet_; }
    std::size_t length() const noexcept { return digits_.size(); }
    std::span<const Symbol> digits() const noexcept { return digits_; }
    Symbol digit(std::size_t position) const noexcept { return digits_[position]; }

    friend bool operator==(const KeyVector&, const KeyVector&) = default;

private:
    std::uint32_t alphabet_;
    std::vector<Symbol> digits_;
};

/// Binary input vector; bits must be 0 or 1 (validated by the mapping ops).
struct BinaryVector {
    std::vector<std::uint8_t> bits;

    friend bool operator==(const BinaryVector&, const BinaryVector&) = default;
};

/// Smallest n such that alphabet_size^n >= pattern_count, i.e. the number of
/// base-q digits of pattern_count - 1. Always at least 1.
inline std::uint32_t required_digits(std::uint64_t pattern_count, std::uint32_t alphabet_size) {
    if (alphabet_size < 2) {
        detail::fail("required_digits: alphabet size must be at least 2");
    }
    if (pattern_count < 1) {
        detail::fail("required_digits: pattern count must be at least 1");
    }
    std::uint32_t digits = 1;
    std::uint64_t cap = alphabet_size;
    while (cap < pattern_count) {
        if (cap > std::numeric_limits<std::uint64_t>::max() / alphabet_size) {
            return digits + 1;  // next power exceeds every uint64 count
        }
        cap *= alphabet_size;
        ++digits;
    }
    return digits;
}

/// Problem dimensions shared by training, recall and the file formats.
struct Dimensions {
    std::uint32_t alphabet_size = 2;   // q
    std::uint32_t pattern_length = 1;  // symbols per pattern
    std::uint32_t key_length = 1;      // digits per key
    std::uint64_t pattern_count = 1;   // stored patterns

    /// key_length_override = 0 picks the minimal key length for pattern_count.
    static Dimensions create(std::uint32_t alphabet_size, std::uint32_t pattern_length,
                             std::uint64_t pattern_count, std::uint32_t key_length_override = 0) {
        Dimensions dims;
        dims.alphabet_size = alphabet_size;
        dims.pattern_length = pattern_length;
        dims.pattern_count = pattern_count;
        dims.key_length = key_length_override != 0
                              ? key_length_override
                              : required_digits(pattern_count, alphabet_size);
        dims.validate();
        return dims;
    }

    void validate() const {
        if (alphabet_size < 2) detail::fail("Dimensions: alphabet size must be at least 2");
        if (pattern_length < 1) detail::fail("Dimensions: pattern length must be at least 1");
        if (pattern_count < 1) detail::fail("Dimensions: pattern count must be at least 1");
        if (key_length < 1) detail::fail("Dimensions: key length must be at least 1");
        if (pattern_count > 0 &&
            !detail::digits_cover_index(alphabet_size, key_length, pattern_count - 1)) {
            detail::fail("Dimensions: key length " + std::to_string(key_length) +
                         " cannot index " + std::to_string(pattern_count) + " patterns");
        }
    }

    friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

/// Base-q expansion of `index`, least significant digit first.
inline KeyVector encode_key(std::uint64_t index, std::uint32_t alphabet_size,
                            std::uint32_t key_length) {
    if (alphabet_size < 2) detail::fail("encode_key: alphabet size must be at least 2");
    if (key_length < 1) detail::fail("encode_key: key length must be at least 1");
    if (!detail::digits_cover_index(alphabet_size, key_length, index)) {
        detail::fail("encode_key: index " + std::to_string(index) + " needs more than " +
                     std::to_string(key_length) + " base-" + std::to_string(alphabet_size) +
                     " digits");
    }
    std::vector<Symbol> digits(key_length);
    std::uint64_t rest = index;
    for (std::uint32_t i = 0; i < key_length; ++i) {
        digits[i] = static_cast<Symbol>(rest % alphabet_size);
        rest /= alphabet_size;
    }
    return KeyVector(alphabet_size, std::move(digits));
}

inline KeyVector encode_key(std::uint64_t index, const Dimensions& dims) {
    return encode_key(index, dims.alphabet_size, dims.key_length);
}

namespace detail {

/// Positional sum of digits, LSB first. overflowed is set when the value does
/// not fit 64 bits; the returned value is then saturated.
inline std::pair<std::uint64_t, bool> decode_digits(std::span<const Symbol> digits,
                                                    std::uint32_t alphabet_size) noexcept {
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t value = 0;
    std::uint64_t scale = 1;
    bool scale_saturated = false;
    for (Symbol d : digits) {
        if (d != 0) {
            if (scale_saturated || d > (kMax - value) / scale) {
                return {kMax, true};
            }
            value += static_cast<std::uint64_t>(d) * scale;
        }
        if (!scale_saturated) {
            if (scale > kMax / alphabet_size) {
                scale_saturated = true;
            } else {
                scale *= alphabet_size;
            }
        }
    }
    return {value, false};
}

}  // namespace detail

/// Inverse of encode_key: sum of digit_i * q^i. Throws if the index does not
/// fit an unsigned 64-bit value.
inline std::uint64_t decode_key(const KeyVector& key) {
    auto [value, overflowed] = detail::decode_digits(key.digits(), key.alphabet_size());
    if (overflowed) {
        throw std::overflow_error("decode_key: index exceeds 64 bits");
    }
    return value;
}

inline constexpr std::uint32_t kMaxChunkBits = 30;

/// Packs consecutive chunk_bits-wide groups of bits into symbols, most
/// significant bit first inside a chunk. Output alphabet is 2^chunk_bits.
inline QPattern map_binary(const BinaryVector& input, std::uint32_t chunk_bits) {
    if (chunk_bits < 1 || chunk_bits > kMaxChunkBits) {
        detail::fail("map_binary: chunk width must be in [1, " +
                     std::to_string(kMaxChunkBits) + "]");
    }
    if (input.bits.size() % chunk_bits != 0) {
        detail::fail("map_binary: bit count " + std::to_string(input.bits.size()) +
                     " not divisible by chunk width " + std::to_string(chunk_bits));
    }
    const std::uint32_t alphabet_size = 1u << chunk_bits;
    std::vector<Symbol> symbols(input.bits.size() / chunk_bits);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        Symbol value = 0;
        for (std::uint32_t t = 0; t < chunk_bits; ++t) {
            const std::uint8_t bit = input.bits[i * chunk_bits + t];
            if (bit > 1) {
                detail::fail("map_binary: bit values must be 0 or 1");
            }
            value = (value << 1) | bit;
        }
        symbols[i] = value;
    }
    return QPattern::trusted(alphabet_size, std::move(symbols));
}

/// Inverse of map_binary. The pattern alphabet must equal 2^chunk_bits.
inline BinaryVector unmap_binary(const QPattern& pattern, std::uint32_t chunk_bits) {
    if (chunk_bits < 1 || chunk_bits > kMaxChunkBits) {
        detail::fail("unmap_binary: chunk width must be in [1, " +
                     std::to_string(kMaxChunkBits) + "]");
    }
    if (pattern.alphabet_size() != (1u << chunk_bits)) {
        detail::fail("unmap_binary: alphabet size " + std::to_string(pattern.alphabet_size()) +
                     " is not 2^" + std::to_string(chunk_bits));
    }
    BinaryVector out;
    out.bits.resize(pattern.length() * chunk_bits);
    for (std::size_t i = 0; i < pattern.length(); ++i) {
        const Symbol value = pattern[i];
        for (std::uint32_t t = 0; t < chunk_bits; ++t) {
            out.bits[i * chunk_bits + t] =
                static_cast<std::uint8_t>((value >> (chunk_bits - 1 - t)) & 1u);
        }
    }
    return out;
}

}  // namespace qvam
