#pragma once

/**
 * Binary file formats and the sweep CSV.
 *
 * QVP1 pattern sets: magic "QVP1", then q, N, M as 32-bit little-endian
 * unsigned, then M*N symbols, one unsigned byte each when q <= 256 and
 * 16-bit little-endian otherwise. Keys are not stored: the key of the
 * pattern at file position mu is encode_key(mu).
 *
 * QVN1 network snapshots: magic "QVN1", then q, N, n, M as 32-bit
 * little-endian unsigned, then the count blocks in row-major
 * (output i, position j, output color a, input color b) order as 32-bit
 * little-endian unsigned, then the n*q bias counts in (i, color) order.
 * Loading checks the block and bias mass invariants.
 */

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qvam/core.hpp"
#include "qvam/experiment.hpp"
#include "qvam/memory.hpp"

namespace qvam::io {

inline constexpr std::uint32_t kMaxStorableAlphabet = 65536;
inline constexpr char kPatternMagic[4] = {'Q', 'V', 'P', '1'};
inline constexpr char kNetworkMagic[4] = {'Q', 'V', 'N', '1'};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32le(std::ostream& out, std::uint32_t value) {
    char bytes[4] = {static_cast<char>(value & 0xFF), static_cast<char>((value >> 8) & 0xFF),
                     static_cast<char>((value >> 16) & 0xFF),
                     static_cast<char>((value >> 24) & 0xFF)};
    out.write(bytes, 4);
}

inline std::uint32_t get_u32le(std::istream& in, const char* what) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw FormatError(std::string("truncated input while reading ") + what);
    }
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline void put_u16le(std::ostream& out, std::uint16_t value) {
    char bytes[2] = {static_cast<char>(value & 0xFF), static_cast<char>((value >> 8) & 0xFF)};
    out.write(bytes, 2);
}

inline void expect_magic(std::istream& in, const char (&magic)[4], const char* what) {
    char found[4];
    if (!in.read(found, 4) || !std::equal(found, found + 4, magic)) {
        throw FormatError(std::string(what) + ": bad magic");
    }
}

inline void expect_end(std::istream& in, const char* what) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(std::string(what) + ": trailing data after payload");
    }
}

}  // namespace detail

inline void write_patterns(std::ostream& out, std::span<const QPattern> patterns) {
    if (patterns.empty()) {
        throw FormatError("QVP1: refusing to write an empty pattern set");
    }
    const std::uint32_t q = patterns[0].alphabet_size();
    const std::size_t length = patterns[0].length();
    if (q > kMaxStorableAlphabet) {
        throw FormatError("QVP1: alphabet size exceeds the 16-bit storage limit");
    }
    if (length < 1 || length > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("QVP1: pattern length out of range");
    }
    if (patterns.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("QVP1: pattern count out of range");
    }
    for (const auto& p : patterns) {
        if (p.alphabet_size() != q || p.length() != length) {
            throw FormatError("QVP1: ragged pattern set");
        }
    }
    out.write(kPatternMagic, 4);
    detail::put_u32le(out, q);
    detail::put_u32le(out, static_cast<std::uint32_t>(length));
    detail::put_u32le(out, static_cast<std::uint32_t>(patterns.size()));
    const bool wide = q > 256;
    for (const auto& p : patterns) {
        for (Symbol s : p.symbols()) {
            if (wide) {
                detail::put_u16le(out, static_cast<std::uint16_t>(s));
            } else {
                out.put(static_cast<char>(s));
            }
        }
    }
    if (!out) {
        throw FormatError("QVP1: write failed");
    }
}

inline std::vector<QPattern> read_patterns(std::istream& in) {
    detail::expect_magic(in, kPatternMagic, "QVP1");
    const std::uint32_t q = detail::get_u32le(in, "QVP1 alphabet size");
    const std::uint32_t length = detail::get_u32le(in, "QVP1 pattern length");
    const std::uint32_t count = detail::get_u32le(in, "QVP1 pattern count");
    if (q < 2 || q > kMaxStorableAlphabet) {
        throw FormatError("QVP1: alphabet size " + std::to_string(q) + " out of range");
    }
    if (length < 1) {
        throw FormatError("QVP1: zero pattern length");
    }
    if (count < 1) {
        throw FormatError("QVP1: zero pattern count");
    }
    const bool wide = q > 256;
    const std::size_t symbol_bytes = wide ? 2 : 1;
    std::vector<QPattern> patterns;
    patterns.reserve(count);
    std::vector<char> buffer(static_cast<std::size_t>(length) * symbol_bytes);
    for (std::uint32_t mu = 0; mu < count; ++mu) {
        if (!in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()))) {
            throw FormatError("QVP1: truncated symbol data at pattern " + std::to_string(mu));
        }
        std::vector<Symbol> symbols(length);
        for (std::uint32_t j = 0; j < length; ++j) {
            const auto* b = reinterpret_cast<const unsigned char*>(buffer.data()) +
                            static_cast<std::size_t>(j) * symbol_bytes;
            const Symbol s = wide ? static_cast<Symbol>(b[0]) |
                                        (static_cast<Symbol>(b[1]) << 8)
                                  : static_cast<Symbol>(b[0]);
            if (s >= q) {
                throw FormatError("QVP1: symbol " + std::to_string(s) +
                                  " outside alphabet at pattern " + std::to_string(mu));
            }
            symbols[j] = s;
        }
        patterns.push_back(QPattern::trusted(q, std::move(symbols)));
    }
    detail::expect_end(in, "QVP1");
    return patterns;
}

inline void write_network(std::ostream& out, const HebbNetwork& net) {
    const Dimensions& dims = net.dims();
    if (dims.alphabet_size > kMaxStorableAlphabet) {
        throw FormatError("QVN1: alphabet size exceeds the storage limit");
    }
    out.write(kNetworkMagic, 4);
    detail::put_u32le(out, dims.alphabet_size);
    detail::put_u32le(out, dims.pattern_length);
    detail::put_u32le(out, dims.key_length);
    detail::put_u32le(out, static_cast<std::uint32_t>(dims.pattern_count));
    for (std::uint32_t i = 0; i < dims.key_length; ++i) {
        for (std::uint32_t j = 0; j < dims.pattern_length; ++j) {
            for (std::uint32_t a = 0; a < dims.alphabet_size; ++a) {
                for (std::uint32_t b = 0; b < dims.alphabet_size; ++b) {
                    detail::put_u32le(out, net.block_count(i, j, a, b));
                }
            }
        }
    }
    for (std::uint32_t i = 0; i < dims.key_length; ++i) {
        for (std::uint32_t k = 0; k < dims.alphabet_size; ++k) {
            detail::put_u32le(out, net.bias_counts(i)[k]);
        }
    }
    if (!out) {
        throw FormatError("QVN1: write failed");
    }
}

inline HebbNetwork read_network(std::istream& in) {
    detail::expect_magic(in, kNetworkMagic, "QVN1");
    Dimensions dims;
    dims.alphabet_size = detail::get_u32le(in, "QVN1 alphabet size");
    dims.pattern_length = detail::get_u32le(in, "QVN1 pattern length");
    dims.key_length = detail::get_u32le(in, "QVN1 key length");
    dims.pattern_count = detail::get_u32le(in, "QVN1 pattern count");
    if (dims.alphabet_size < 2 || dims.alphabet_size > kMaxStorableAlphabet) {
        throw FormatError("QVN1: alphabet size out of range");
    }
    if (dims.pattern_length < 1 || dims.key_length < 1 || dims.pattern_count < 1) {
        throw FormatError("QVN1: degenerate dimensions");
    }
    const std::size_t q = dims.alphabet_size;
    const std::size_t block_entries =
        static_cast<std::size_t>(dims.key_length) * dims.pattern_length * q * q;
    // 8 GiB of counts; anything larger is a corrupt header, not a real net
    if (block_entries > (std::size_t{1} << 31)) {
        throw FormatError("QVN1: implausibly large network header");
    }
    std::vector<std::uint32_t> blocks(block_entries);
    for (std::uint32_t i = 0; i < dims.key_length; ++i) {
        for (std::uint32_t j = 0; j < dims.pattern_length; ++j) {
            const std::size_t base =
                (static_cast<std::size_t>(i) * dims.pattern_length + j) * q * q;
            for (std::size_t a = 0; a < q; ++a) {
                for (std::size_t b = 0; b < q; ++b) {
                    blocks[base + b * q + a] = detail::get_u32le(in, "QVN1 block counts");
                }
            }
        }
    }
    std::vector<std::uint32_t> bias(static_cast<std::size_t>(dims.key_length) * q);
    for (auto& value : bias) {
        value = detail::get_u32le(in, "QVN1 bias counts");
    }
    detail::expect_end(in, "QVN1");

    // The exclusion flag is not stored: a zero diagonal block implies it was
    // on (a trained block always carries mass M >= 1).
    std::uint64_t diagonal_mass = 0;
    for (std::size_t e = 0; e < q * q; ++e) {
        diagonal_mass += blocks[e];
    }
    const bool excluded = diagonal_mass == 0;
    try {
        return HebbNetwork::from_parts(dims, excluded, std::move(blocks), std::move(bias));
    } catch (const std::invalid_argument& err) {
        throw FormatError(std::string("QVN1: ") + err.what());
    }
}

inline constexpr std::string_view kCurveCsvHeader =
    "b,trials,errors,reliability_measured,reliability_theory,wilson_halfwidth,"
    "perceptron_ops,baseline_ops";

/// One header row, then one row per point; reals fixed at 6 decimals.
inline void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points) {
    out << kCurveCsvHeader << '\n';
    char row[256];
    for (const CurvePoint& p : points) {
        std::snprintf(row, sizeof(row), "%.6f,%llu,%llu,%.6f,%.6f,%.6f,%llu,%llu\n", p.noise,
                      static_cast<unsigned long long>(p.trials),
                      static_cast<unsigned long long>(p.errors), p.reliability_measured,
                      p.reliability_theory, p.wilson_halfwidth,
                      static_cast<unsigned long long>(p.perceptron_ops),
                      static_cast<unsigned long long>(p.baseline_ops));
        out << row;
    }
    if (!out) {
        throw FormatError("CSV: write failed");
    }
}

// Path-based conveniences.

inline void save_patterns(const std::filesystem::path& path,
                          std::span<const QPattern> patterns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_patterns(out, patterns);
}

inline std::vector<QPattern> load_patterns(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_patterns(in);
}

inline void save_network(const std::filesystem::path& path, const HebbNetwork& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_network(out, net);
}

inline HebbNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_network(in);
}

}  // namespace qvam::io
