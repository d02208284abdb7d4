#pragma once

/**
 * Closed-form performance model of the identifying perceptron.
 *
 * With N_e = N(1-b)^2 the undistorted signal mass, the estimated probability
 * of misidentifying one of M stored patterns is
 *
 *     P = n * sqrt(M / (pi * N_e)) * exp(-N_e * q^2 / (4 M))
 *
 * an asymptotic estimate that can exceed 1 outside its validity regime, so
 * both the raw and the [0,1]-clamped value are reported. Inverting the
 * exponential factor gives the capacity bound M_max = N_e q^2 / (4 |ln P0|)
 * and the critical distortion b_max = 1 - 2 sqrt(M) / (q sqrt(N)).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "qvam/core.hpp"

namespace qvam {

/// Raised where full distortion (b = 1) leaves zero effective dimension and
/// the error model degenerates.
class NoSignalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameter bundle for the analytic estimates.
struct TheoryInput {
    std::uint32_t pattern_length = 1;   // N
    std::uint64_t pattern_count = 1;    // M
    std::uint32_t alphabet_size = 2;    // q
    double distortion = 0.0;            // b, fraction of replaced symbols
    std::uint32_t key_length = 1;       // n, output digits
    double target_error = 0.01;         // P0, for the capacity bound

    /// key_length_override = 0 sizes the output layer exactly as train would.
    static TheoryInput create(std::uint32_t pattern_length, std::uint64_t pattern_count,
                              std::uint32_t alphabet_size, double distortion,
                              double target_error = 0.01,
                              std::uint32_t key_length_override = 0) {
        TheoryInput t;
        t.pattern_length = pattern_length;
        t.pattern_count = pattern_count;
        t.alphabet_size = alphabet_size;
        t.distortion = distortion;
        t.target_error = target_error;
        t.key_length = key_length_override != 0
                           ? key_length_override
                           : required_digits(pattern_count, alphabet_size);
        t.validate();
        return t;
    }

    void validate() const {
        if (pattern_length < 1) detail::fail("TheoryInput: pattern length must be at least 1");
        if (pattern_count < 1) detail::fail("TheoryInput: pattern count must be at least 1");
        if (alphabet_size < 2) detail::fail("TheoryInput: alphabet size must be at least 2");
        if (key_length < 1) detail::fail("TheoryInput: key length must be at least 1");
        if (!(distortion >= 0.0 && distortion <= 1.0)) {
            detail::fail("TheoryInput: distortion must lie in [0, 1]");
        }
        if (!(target_error > 0.0 && target_error < 1.0)) {
            detail::fail("TheoryInput: target error must lie in (0, 1)");
        }
    }
};

/// Undistorted signal mass N(1-b)^2.
inline double effective_dim(std::uint32_t pattern_length, double distortion) {
    if (!(distortion >= 0.0 && distortion <= 1.0)) {
        detail::fail("effective_dim: distortion must lie in [0, 1]");
    }
    const double kept = 1.0 - distortion;
    return static_cast<double>(pattern_length) * kept * kept;
}

struct ErrorEstimate {
    double raw = 0.0;      // the formula value, may exceed 1
    double clamped = 0.0;  // min(raw, 1)
    /// The estimate is asymptotic; treat values above 0.5 as untrustworthy.
    bool within_validity = false;
};

inline ErrorEstimate error_probability(const TheoryInput& t) {
    t.validate();
    const double ne = effective_dim(t.pattern_length, t.distortion);
    if (ne <= 0.0) {
        throw NoSignalError("error_probability: no signal, full distortion gives N_e = 0");
    }
    const double count = static_cast<double>(t.pattern_count);
    const double q = static_cast<double>(t.alphabet_size);
    const double raw = static_cast<double>(t.key_length) *
                       std::sqrt(count / (std::numbers::pi * ne)) *
                       std::exp(-ne * q * q / (4.0 * count));
    return {raw, std::min(raw, 1.0), raw <= 0.5};
}

/// Largest pattern count identifiable with error below target_error.
inline double capacity(const TheoryInput& t) {
    t.validate();
    const double ne = effective_dim(t.pattern_length, t.distortion);
    if (ne <= 0.0) {
        throw NoSignalError("capacity: no signal, full distortion gives N_e = 0");
    }
    const double q = static_cast<double>(t.alphabet_size);
    return ne * q * q / (4.0 * std::abs(std::log(t.target_error)));
}

struct DistortionBound {
    double raw = 0.0;      // 1 - 2 sqrt(M) / (q sqrt(N)); negative when overloaded
    double clamped = 0.0;  // raw clipped to [0, 1]
};

/// Distortion level beyond which identification collapses.
inline DistortionBound critical_distortion(std::uint32_t pattern_length,
                                           std::uint64_t pattern_count,
                                           std::uint32_t alphabet_size) {
    if (pattern_length < 1) detail::fail("critical_distortion: pattern length must be >= 1");
    if (pattern_count < 1) detail::fail("critical_distortion: pattern count must be >= 1");
    if (alphabet_size < 2) detail::fail("critical_distortion: alphabet size must be >= 2");
    const double raw = 1.0 - 2.0 * std::sqrt(static_cast<double>(pattern_count)) /
                                 (static_cast<double>(alphabet_size) *
                                  std::sqrt(static_cast<double>(pattern_length)));
    return {raw, std::clamp(raw, 0.0, 1.0)};
}

struct LayerSizeEstimate {
    double exact = 0.0;           // 2 + ln(N_e) / ln(q)
    std::uint32_t practical = 0;  // ceiling, the usable layer size
};

/// Output-layer size that suffices at effective dimension `effective_dim`.
inline LayerSizeEstimate max_output_neurons(double effective_dim, std::uint32_t alphabet_size) {
    if (!(effective_dim >= 1.0)) {
        detail::fail("max_output_neurons: effective dimension must be at least 1");
    }
    if (alphabet_size < 2) {
        detail::fail("max_output_neurons: alphabet size must be at least 2");
    }
    const double exact =
        2.0 + std::log(effective_dim) / std::log(static_cast<double>(alphabet_size));
    return {exact, static_cast<std::uint32_t>(std::ceil(exact))};
}

struct WorkEstimate {
    std::uint64_t perceptron = 0;   // n * N * q recall accumulations
    std::uint64_t direct_scan = 0;  // N * M exhaustive-scan comparisons
};

/// Analytic per-probe operation counts for both retrieval routes.
inline WorkEstimate op_counts(const Dimensions& dims) {
    dims.validate();
    const unsigned __int128 perceptron = static_cast<unsigned __int128>(dims.key_length) *
                                         dims.pattern_length * dims.alphabet_size;
    const unsigned __int128 scan =
        static_cast<unsigned __int128>(dims.pattern_length) * dims.pattern_count;
    constexpr unsigned __int128 kMax = std::numeric_limits<std::uint64_t>::max();
    if (perceptron > kMax || scan > kMax) {
        throw std::overflow_error("op_counts: operation count exceeds 64 bits");
    }
    return {static_cast<std::uint64_t>(perceptron), static_cast<std::uint64_t>(scan)};
}

}  // namespace qvam
