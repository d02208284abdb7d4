#pragma once

/**
 * Two-layer vector perceptron memory.
 *
 * Training counts co-occurrences of key digits and pattern symbols into one
 * q x q integer block per (output digit, input position) pair; the block
 * whose output index equals its input position is held at zero unless that
 * exclusion is disabled. Recall computes, for each output digit, the local
 * field projected onto every color and takes the argmax.
 *
 * All field arithmetic is pre-multiplied by q so projections are exact
 * integers: proj[k] = q * sum_j block(i,j)[k][X_j] - N * bias(i)[k]. The
 * argmax is invariant under positive scaling, so this changes no decision
 * while making results bit-reproducible across platforms. A matrix-free
 * recall path (oracle_identify) evaluates the same projections from the
 * stored patterns directly and must agree with the trained network exactly.
 */

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qvam/core.hpp"

namespace qvam {

struct TrainOptions {
    /// Zero the block coupling output digit i with input position i.
    bool exclude_matching_index = true;
    /// Worker count for training; partial count grids are merged by addition.
    unsigned threads = 1;
};

/// Work counters filled by the instrumented recall paths.
struct OpCounts {
    std::uint64_t accumulations = 0;  // scaled-count adds into projections
    std::uint64_t bias_terms = 0;     // bias subtractions
    std::uint64_t comparisons = 0;    // winner-selection comparisons
};

/// Projections of one output neuron's local field onto every color,
/// pre-multiplied by q.
struct FieldVector {
    std::vector<std::int64_t> projections;
};

/// Result of one recall pass.
struct Identification {
    KeyVector key;                      // winning digit per output neuron
    std::uint64_t index = 0;            // decoded pattern index
    bool valid = false;                 // index < stored pattern count
    std::vector<std::int64_t> margins;  // winner minus runner-up, per digit

    friend bool operator==(const Identification&, const Identification&) = default;
};

namespace detail {

struct Winner {
    std::uint32_t color;
    std::int64_t margin;
};

/// First maximal entry wins; margin is winner minus runner-up (0 on a tie).
inline Winner select_winner(std::span<const std::int64_t> projections) noexcept {
    std::uint32_t winner = 0;
    std::int64_t best = projections[0];
    std::int64_t second = std::numeric_limits<std::int64_t>::min();
    for (std::uint32_t k = 1; k < projections.size(); ++k) {
        const std::int64_t v = projections[k];
        if (v > best) {
            second = best;
            best = v;
            winner = k;
        } else if (v > second) {
            second = v;
        }
    }
    return {winner, best - second};
}

inline Identification finish_identification(std::uint32_t alphabet_size,
                                            std::vector<Symbol> digits,
                                            std::vector<std::int64_t> margins,
                                            std::uint64_t pattern_count) {
    auto [index, overflowed] = decode_digits(digits, alphabet_size);
    Identification id{KeyVector(alphabet_size, std::move(digits)), index,
                      !overflowed && index < pattern_count, std::move(margins)};
    return id;
}

inline void check_training_set(std::span<const QPattern> patterns,
                               std::span<const KeyVector> keys) {
    if (patterns.empty()) {
        fail("train: at least one pattern required");
    }
    if (patterns.size() != keys.size()) {
        fail("train: pattern and key counts differ");
    }
    if (patterns.size() > std::numeric_limits<std::uint32_t>::max()) {
        fail("train: pattern count exceeds 32-bit counter range");
    }
    const std::uint32_t q = patterns[0].alphabet_size();
    const std::size_t length = patterns[0].length();
    const std::size_t key_length = keys[0].length();
    if (length < 1) {
        fail("train: patterns must be non-empty");
    }
    for (std::size_t mu = 0; mu < patterns.size(); ++mu) {
        if (patterns[mu].alphabet_size() != q || keys[mu].alphabet_size() != q) {
            fail("train: mismatched alphabet size at pattern " + std::to_string(mu));
        }
        if (patterns[mu].length() != length) {
            fail("train: ragged pattern length at pattern " + std::to_string(mu));
        }
        if (keys[mu].length() != key_length) {
            fail("train: ragged key length at pattern " + std::to_string(mu));
        }
    }
}

/// Guards q * N * M, the largest magnitude reached by scaled projections.
inline void check_field_range(const Dimensions& dims) {
    unsigned __int128 magnitude = static_cast<unsigned __int128>(dims.alphabet_size) *
                                  dims.pattern_length * dims.pattern_count;
    if (magnitude > (static_cast<unsigned __int128>(1) << 62)) {
        fail("train: q * N * M too large for exact 64-bit field arithmetic");
    }
}

}  // namespace detail

std::uint64_t overlap(const QPattern& a, const QPattern& b);

class HebbNetwork {
public:
    /// Counts key-digit / pattern-symbol co-occurrences over all pairs.
    /// Order-independent; multi-threaded training merges partial grids.
    static HebbNetwork train(std::span<const QPattern> patterns,
                             std::span<const KeyVector> keys, TrainOptions options = {}) {
        detail::check_training_set(patterns, keys);
        Dimensions dims;
        dims.alphabet_size = patterns[0].alphabet_size();
        dims.pattern_length = static_cast<std::uint32_t>(patterns[0].length());
        dims.key_length = static_cast<std::uint32_t>(keys[0].length());
        dims.pattern_count = patterns.size();
        detail::check_field_range(dims);

        HebbNetwork net(dims, options.exclude_matching_index);
        const unsigned workers =
            std::max<unsigned>(1, std::min<std::uint64_t>(options.threads, patterns.size()));
        if (workers == 1) {
            net.accumulate(patterns, keys, 0, patterns.size());
            return net;
        }

        std::vector<HebbNetwork> partials;
        partials.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            partials.emplace_back(HebbNetwork(dims, options.exclude_matching_index));
        }
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (patterns.size() + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(patterns.size(), lo + chunk);
            pool.emplace_back([&, lo, hi, w] { partials[w].accumulate(patterns, keys, lo, hi); });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& partial : partials) {
            for (std::size_t idx = 0; idx < net.blocks_.size(); ++idx) {
                net.blocks_[idx] += partial.blocks_[idx];
            }
            for (std::size_t idx = 0; idx < net.bias_.size(); ++idx) {
                net.bias_[idx] += partial.bias_[idx];
            }
        }
        return net;
    }

    /// Rebuilds a network from raw count grids (snapshot loading). Validates
    /// sizes and the block/bias mass invariants.
    static HebbNetwork from_parts(const Dimensions& dims, bool exclude_matching_index,
                                  std::vector<std::uint32_t> blocks,
                                  std::vector<std::uint32_t> bias) {
        dims.validate();
        detail::check_field_range(dims);
        HebbNetwork net(dims, exclude_matching_index, std::move(blocks), std::move(bias));
        const std::size_t q = dims.alphabet_size;
        if (net.blocks_.size() != static_cast<std::size_t>(dims.key_length) *
                                      dims.pattern_length * q * q ||
            net.bias_.size() != static_cast<std::size_t>(dims.key_length) * q) {
            detail::fail("from_parts: count grid sizes do not match dimensions");
        }
        for (std::uint32_t i = 0; i < dims.key_length; ++i) {
            for (std::uint32_t j = 0; j < dims.pattern_length; ++j) {
                const auto b = net.block(i, j);
                const std::uint64_t mass = std::accumulate(b.begin(), b.end(), std::uint64_t{0});
                const bool zeroed = exclude_matching_index && i == j;
                const std::uint64_t expected = zeroed ? 0 : dims.pattern_count;
                if (mass != expected) {
                    detail::fail("from_parts: block (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") mass " + std::to_string(mass) +
                                 " != " + std::to_string(expected));
                }
            }
            const auto c = net.bias_counts(i);
            const std::uint64_t mass = std::accumulate(c.begin(), c.end(), std::uint64_t{0});
            if (mass != dims.pattern_count) {
                detail::fail("from_parts: bias counts for output " + std::to_string(i) +
                             " sum to " + std::to_string(mass));
            }
        }
        return net;
    }

    const Dimensions& dims() const noexcept { return dims_; }
    bool matching_index_excluded() const noexcept { return exclude_matching_; }

    /// Count of stored pairs with output digit color a at neuron i and input
    /// color b at position j.
    std::uint32_t block_count(std::uint32_t output_index, std::uint32_t input_index,
                              std::uint32_t output_color, std::uint32_t input_color) const {
        return blocks_[block_offset(output_index, input_index) +
                       static_cast<std::size_t>(input_color) * dims_.alphabet_size +
                       output_color];
    }

    /// One q*q block, laid out input-color-major: entry (a, b) at b*q + a.
    std::span<const std::uint32_t> block(std::uint32_t output_index,
                                         std::uint32_t input_index) const {
        const std::size_t q = dims_.alphabet_size;
        return {blocks_.data() + block_offset(output_index, input_index), q * q};
    }

    /// Per-color counts of key digits observed at output neuron i.
    std::span<const std::uint32_t> bias_counts(std::uint32_t output_index) const {
        return {bias_.data() + static_cast<std::size_t>(output_index) * dims_.alphabet_size,
                dims_.alphabet_size};
    }

    /// Scaled local-field projections of output neuron `output_index`.
    FieldVector local_field(const QPattern& probe, std::uint32_t output_index) const {
        check_probe(probe);
        if (output_index >= dims_.key_length) {
            detail::fail("local_field: output index out of range");
        }
        FieldVector field;
        field.projections.resize(dims_.alphabet_size);
        project(probe.symbols(), output_index, field.projections, nullptr);
        return field;
    }

    Identification identify(const QPattern& probe, OpCounts* ops = nullptr) const {
        check_probe(probe);
        return identify_span(probe.symbols(), ops);
    }

    /// Recall without dimension checks; `probe` must have pattern_length
    /// symbols below alphabet_size.
    Identification identify_span(std::span<const Symbol> probe, OpCounts* ops = nullptr) const {
        const std::uint32_t q = dims_.alphabet_size;
        const std::uint32_t n = dims_.key_length;
        std::vector<Symbol> digits(n);
        std::vector<std::int64_t> margins(n);
        std::vector<std::int64_t> projections(q);
        for (std::uint32_t i = 0; i < n; ++i) {
            project(probe, i, projections, ops);
            const auto top = detail::select_winner(projections);
            digits[i] = top.color;
            margins[i] = top.margin;
            if (ops != nullptr) {
                ops->comparisons += q - 1;
            }
        }
        return detail::finish_identification(q, std::move(digits), std::move(margins),
                                             dims_.pattern_count);
    }

private:
    HebbNetwork(const Dimensions& dims, bool exclude)
        : dims_(dims),
          exclude_matching_(exclude),
          blocks_(static_cast<std::size_t>(dims.key_length) * dims.pattern_length *
                      dims.alphabet_size * dims.alphabet_size,
                  0),
          bias_(static_cast<std::size_t>(dims.key_length) * dims.alphabet_size, 0) {}

    HebbNetwork(const Dimensions& dims, bool exclude, std::vector<std::uint32_t> blocks,
                std::vector<std::uint32_t> bias)
        : dims_(dims),
          exclude_matching_(exclude),
          blocks_(std::move(blocks)),
          bias_(std::move(bias)) {}

    std::size_t block_offset(std::uint32_t output_index, std::uint32_t input_index) const {
        const std::size_t q = dims_.alphabet_size;
        return (static_cast<std::size_t>(output_index) * dims_.pattern_length + input_index) *
               q * q;
    }

    void accumulate(std::span<const QPattern> patterns, std::span<const KeyVector> keys,
                    std::size_t lo, std::size_t hi) {
        const std::uint32_t q = dims_.alphabet_size;
        const std::uint32_t length = dims_.pattern_length;
        for (std::size_t mu = lo; mu < hi; ++mu) {
            const auto symbols = patterns[mu].symbols();
            for (std::uint32_t i = 0; i < dims_.key_length; ++i) {
                const Symbol digit = keys[mu].digit(i);
                std::uint32_t* row = blocks_.data() + block_offset(i, 0);
                for (std::uint32_t j = 0; j < length; ++j) {
                    if (exclude_matching_ && j == i) {
                        continue;
                    }
                    row[(static_cast<std::size_t>(j) * q + symbols[j]) * q + digit] += 1;
                }
                bias_[static_cast<std::size_t>(i) * q + digit] += 1;
            }
        }
    }

    void check_probe(const QPattern& probe) const {
        if (probe.alphabet_size() != dims_.alphabet_size ||
            probe.length() != dims_.pattern_length) {
            detail::fail("probe dimensions do not match the network");
        }
    }

    /// out[k] = q * sum_j block(i,j)[k][probe_j] - N * bias(i)[k]
    void project(std::span<const Symbol> probe, std::uint32_t output_index,
                 std::vector<std::int64_t>& out, OpCounts* ops) const {
        const std::uint32_t q = dims_.alphabet_size;
        const std::uint32_t length = dims_.pattern_length;
        std::fill(out.begin(), out.end(), std::int64_t{0});
        const std::uint32_t* base = blocks_.data() + block_offset(output_index, 0);
        std::uint64_t columns = 0;
        for (std::uint32_t j = 0; j < length; ++j) {
            if (exclude_matching_ && j == output_index) {
                continue;
            }
            const std::uint32_t* column =
                base + (static_cast<std::size_t>(j) * q + probe[j]) * q;
            for (std::uint32_t k = 0; k < q; ++k) {
                out[k] += column[k];
            }
            ++columns;
        }
        const std::uint32_t* bias =
            bias_.data() + static_cast<std::size_t>(output_index) * q;
        for (std::uint32_t k = 0; k < q; ++k) {
            out[k] = static_cast<std::int64_t>(q) * out[k] -
                     static_cast<std::int64_t>(length) * bias[k];
        }
        if (ops != nullptr) {
            ops->accumulations += columns * q;
            ops->bias_terms += q;
        }
    }

    Dimensions dims_;
    bool exclude_matching_;
    std::vector<std::uint32_t> blocks_;  // [output i][position j][input color][output color]
    std::vector<std::uint32_t> bias_;    // [output i][color]
};

/// Number of positions where the two patterns agree.
inline std::uint64_t overlap(const QPattern& a, const QPattern& b) {
    if (a.alphabet_size() != b.alphabet_size() || a.length() != b.length()) {
        detail::fail("overlap: mismatched dimensions");
    }
    const auto sa = a.symbols();
    const auto sb = b.symbols();
    std::uint64_t hits = 0;
    for (std::size_t j = 0; j < sa.size(); ++j) {
        hits += sa[j] == sb[j] ? 1 : 0;
    }
    return hits;
}

namespace detail {

/// Matrix-free recall. For each output digit i, every stored pair votes its
/// key digit with weight equal to the probe overlap, minus one when position
/// i exists and agrees with the probe (mirroring the zeroed block).
/// Projections are identical to the trained-network path, integer for integer.
inline Identification oracle_identify_core(std::span<const QPattern> patterns,
                                           std::span<const KeyVector> keys,
                                           const Dimensions& dims, bool exclude_matching_index,
                                           std::span<const Symbol> probe,
                                           OpCounts* ops = nullptr) {
    const std::uint32_t q = dims.alphabet_size;
    const std::uint32_t n = dims.key_length;
    const std::uint32_t length = dims.pattern_length;
    const std::size_t count = patterns.size();

    std::vector<std::uint64_t> overlaps(count);
    for (std::size_t mu = 0; mu < count; ++mu) {
        const auto stored = patterns[mu].symbols();
        std::uint64_t hits = 0;
        for (std::uint32_t j = 0; j < length; ++j) {
            hits += stored[j] == probe[j] ? 1 : 0;
        }
        overlaps[mu] = hits;
    }
    if (ops != nullptr) {
        ops->accumulations += static_cast<std::uint64_t>(count) * length;
    }

    std::vector<Symbol> digits(n);
    std::vector<std::int64_t> margins(n);
    std::vector<std::int64_t> votes(q);
    std::vector<std::int64_t> bias(q);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::fill(votes.begin(), votes.end(), std::int64_t{0});
        std::fill(bias.begin(), bias.end(), std::int64_t{0});
        const bool position_exists = i < length;
        for (std::size_t mu = 0; mu < count; ++mu) {
            const Symbol digit = keys[mu].digit(i);
            std::int64_t weight = static_cast<std::int64_t>(overlaps[mu]);
            if (exclude_matching_index && position_exists && patterns[mu][i] == probe[i]) {
                weight -= 1;
            }
            votes[digit] += weight;
            bias[digit] += 1;
        }
        for (std::uint32_t k = 0; k < q; ++k) {
            votes[k] = static_cast<std::int64_t>(q) * votes[k] -
                       static_cast<std::int64_t>(length) * bias[k];
        }
        if (ops != nullptr) {
            ops->accumulations += count;
            ops->bias_terms += q;
            ops->comparisons += q - 1;
        }
        const auto top = select_winner(votes);
        digits[i] = top.color;
        margins[i] = top.margin;
    }
    return finish_identification(q, std::move(digits), std::move(margins), count);
}

}  // namespace detail

/// Reference recall path computed straight from the stored pairs, without a
/// trained network. Agrees with HebbNetwork::identify bit-exactly.
inline Identification oracle_identify(std::span<const QPattern> patterns,
                                      std::span<const KeyVector> keys, const QPattern& probe,
                                      bool exclude_matching_index = true,
                                      OpCounts* ops = nullptr) {
    detail::check_training_set(patterns, keys);
    Dimensions dims;
    dims.alphabet_size = patterns[0].alphabet_size();
    dims.pattern_length = static_cast<std::uint32_t>(patterns[0].length());
    dims.key_length = static_cast<std::uint32_t>(keys[0].length());
    dims.pattern_count = patterns.size();
    detail::check_field_range(dims);
    if (probe.alphabet_size() != dims.alphabet_size ||
        probe.length() != dims.pattern_length) {
        detail::fail("oracle_identify: probe dimensions do not match the pattern set");
    }
    return detail::oracle_identify_core(patterns, keys, dims, exclude_matching_index,
                                        probe.symbols(), ops);
}

}  // namespace qvam
