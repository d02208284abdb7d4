#pragma once

/**
 * Monte Carlo reliability harness.
 *
 * A trial distorts a uniformly chosen stored pattern, recalls it through an
 * identification engine, and counts an error when the decoded index differs
 * from the chosen one (an out-of-range decoded index counts as an error).
 * Per-trial random substreams keyed by (seed, point, trial) make every sweep
 * reproducible byte for byte regardless of worker count.
 */

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "qvam/analysis.hpp"
#include "qvam/core.hpp"
#include "qvam/memory.hpp"
#include "qvam/rng.hpp"

namespace qvam {

enum class NoiseModel {
    /// Each distorted symbol is replaced by a uniformly random *different*
    /// color, so a noise level b changes exactly round(b*N) positions.
    kDistinctColor,
    /// Replacement drawn uniformly over all q colors; may repeat the
    /// original. Sensitivity variant only.
    kAnyColor,
};

struct NoiseSpec {
    double level = 0.0;  // fraction b of distorted positions
    std::uint64_t seed = 0;
    NoiseModel model = NoiseModel::kDistinctColor;
};

namespace detail {

/// Distorts src into dst. Draw order per trial: first the round(level*N)
/// victim positions (partial Fisher-Yates), then one replacement color each.
/// `positions` is caller-owned scratch, reused across trials.
inline void distort_into(std::span<const Symbol> src, std::span<Symbol> dst,
                         std::uint32_t alphabet_size, double level, NoiseModel model,
                         SplitMix64& rng, std::vector<std::uint32_t>& positions) {
    const std::size_t length = src.size();
    std::copy(src.begin(), src.end(), dst.begin());
    const auto distorted = static_cast<std::size_t>(
        std::llround(level * static_cast<double>(length)));
    if (distorted == 0) {
        return;
    }
    positions.resize(length);
    for (std::size_t j = 0; j < length; ++j) {
        positions[j] = static_cast<std::uint32_t>(j);
    }
    for (std::size_t t = 0; t < distorted; ++t) {
        const std::size_t pick = t + rng.below(length - t);
        std::swap(positions[t], positions[pick]);
    }
    for (std::size_t t = 0; t < distorted; ++t) {
        const std::uint32_t p = positions[t];
        if (model == NoiseModel::kDistinctColor) {
            const auto draw = static_cast<Symbol>(rng.below(alphabet_size - 1));
            dst[p] = draw < dst[p] ? draw : draw + 1;
        } else {
            dst[p] = static_cast<Symbol>(rng.below(alphabet_size));
        }
    }
}

}  // namespace detail

/// Replaces round(level * N) distinct positions of `pattern`, deterministic
/// in (spec.seed, trial).
inline QPattern distort(const QPattern& pattern, const NoiseSpec& spec, std::uint64_t trial) {
    if (!(spec.level >= 0.0 && spec.level <= 1.0)) {
        detail::fail("distort: noise level must lie in [0, 1]");
    }
    SplitMix64 rng(substream_key(spec.seed, trial));
    std::vector<Symbol> out(pattern.length());
    std::vector<std::uint32_t> positions;
    detail::distort_into(pattern.symbols(), out, pattern.alphabet_size(), spec.level,
                         spec.model, rng, positions);
    return QPattern::trusted(pattern.alphabet_size(), std::move(out));
}

/// Recall interface shared by the trained-network and matrix-free paths.
class IdentifyEngine {
public:
    virtual ~IdentifyEngine() = default;
    virtual const Dimensions& dims() const noexcept = 0;
    virtual std::string_view name() const noexcept = 0;
    /// `probe` must conform to dims(); callers validate once per batch.
    virtual Identification identify(std::span<const Symbol> probe,
                                    OpCounts* ops = nullptr) const = 0;
};

class WeightsEngine final : public IdentifyEngine {
public:
    explicit WeightsEngine(const HebbNetwork& net) : net_(&net) {}
    const Dimensions& dims() const noexcept override { return net_->dims(); }
    std::string_view name() const noexcept override { return "weights"; }
    Identification identify(std::span<const Symbol> probe,
                            OpCounts* ops = nullptr) const override {
        return net_->identify_span(probe, ops);
    }

private:
    const HebbNetwork* net_;
};

/// Recall straight from the stored pairs; trades the n*N*q weight pass for
/// N*M overlap work. Referenced pattern/key storage must outlive the engine.
class MatrixFreeEngine final : public IdentifyEngine {
public:
    MatrixFreeEngine(std::span<const QPattern> patterns, std::span<const KeyVector> keys,
                     bool exclude_matching_index = true)
        : patterns_(patterns), keys_(keys), exclude_(exclude_matching_index) {
        detail::check_training_set(patterns, keys);
        dims_.alphabet_size = patterns[0].alphabet_size();
        dims_.pattern_length = static_cast<std::uint32_t>(patterns[0].length());
        dims_.key_length = static_cast<std::uint32_t>(keys[0].length());
        dims_.pattern_count = patterns.size();
        detail::check_field_range(dims_);
    }

    const Dimensions& dims() const noexcept override { return dims_; }
    std::string_view name() const noexcept override { return "matrixfree"; }
    Identification identify(std::span<const Symbol> probe,
                            OpCounts* ops = nullptr) const override {
        return detail::oracle_identify_core(patterns_, keys_, dims_, exclude_, probe, ops);
    }

private:
    std::span<const QPattern> patterns_;
    std::span<const KeyVector> keys_;
    Dimensions dims_;
    bool exclude_;
};

/// One sweep sample: measured and predicted reliability at a noise level.
struct CurvePoint {
    double noise = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double reliability_measured = 0.0;
    double reliability_theory = 0.0;
    double wilson_halfwidth = 0.0;
    std::uint64_t perceptron_ops = 0;  // instrumented recall accumulations per probe
    std::uint64_t baseline_ops = 0;    // exhaustive-scan comparisons per probe
};

namespace detail {

inline constexpr double kWilsonZ = 1.959963984540054;  // 97.5% normal quantile

/// Half-width of the 95% Wilson score interval for a proportion.
inline double wilson_halfwidth(std::uint64_t hits, std::uint64_t trials) {
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / n;
    return kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
}

inline std::uint64_t run_trials(const IdentifyEngine& engine,
                                std::span<const QPattern> patterns, double noise,
                                NoiseModel model, std::uint64_t point_seed,
                                std::uint64_t trial_lo, std::uint64_t trial_hi) {
    const Dimensions& dims = engine.dims();
    std::vector<Symbol> probe(dims.pattern_length);
    std::vector<std::uint32_t> positions;
    std::uint64_t errors = 0;
    for (std::uint64_t t = trial_lo; t < trial_hi; ++t) {
        SplitMix64 rng(substream_key(point_seed, t));
        const std::uint64_t mu = rng.below(patterns.size());
        detail::distort_into(patterns[mu].symbols(), probe, dims.alphabet_size, noise, model,
                             rng, positions);
        const Identification id = engine.identify(probe);
        if (!id.valid || id.index != mu) {
            ++errors;
        }
    }
    return errors;
}

}  // namespace detail

std::uint64_t baseline_scan_identify(std::span<const QPattern> patterns, const QPattern& probe,
                                     std::uint64_t* comparisons);

/// Monte Carlo reliability estimate at one noise level. Results depend only
/// on (noise, trials, seed), never on `threads`.
inline CurvePoint run_point(const IdentifyEngine& engine, std::span<const QPattern> patterns,
                            double noise, std::uint64_t trials, std::uint64_t seed,
                            unsigned threads = 1, NoiseModel model = NoiseModel::kDistinctColor,
                            bool measure_baseline = false) {
    const Dimensions& dims = engine.dims();
    if (patterns.size() != dims.pattern_count || patterns.empty()) {
        detail::fail("run_point: pattern set does not match engine dimensions");
    }
    if (trials < 1) {
        detail::fail("run_point: at least one trial required");
    }
    if (!(noise >= 0.0 && noise <= 1.0)) {
        detail::fail("run_point: noise level must lie in [0, 1]");
    }

    CurvePoint point;
    point.noise = noise;
    point.trials = trials;

    const unsigned workers =
        std::max<unsigned>(1, static_cast<unsigned>(std::min<std::uint64_t>(threads, trials)));
    if (workers == 1) {
        point.errors =
            detail::run_trials(engine, patterns, noise, model, seed, 0, trials);
    } else {
        std::vector<std::uint64_t> partial(workers, 0);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::uint64_t chunk = (trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t lo = w * chunk;
            const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + chunk);
            pool.emplace_back([&, lo, hi, w] {
                partial[w] =
                    detail::run_trials(engine, patterns, noise, model, seed, lo, hi);
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (std::uint64_t e : partial) {
            point.errors += e;
        }
    }

    point.reliability_measured =
        1.0 - static_cast<double>(point.errors) / static_cast<double>(trials);
    point.wilson_halfwidth = detail::wilson_halfwidth(point.errors, trials);
    try {
        const auto estimate = error_probability(
            TheoryInput::create(dims.pattern_length, dims.pattern_count, dims.alphabet_size,
                                noise, 0.01, dims.key_length));
        point.reliability_theory = 1.0 - estimate.clamped;
    } catch (const NoSignalError&) {
        point.reliability_theory = 0.0;  // b = 1 limit of the clamped estimate
    }

    OpCounts ops;
    engine.identify(patterns[0].symbols(), &ops);
    point.perceptron_ops = ops.accumulations;
    if (measure_baseline) {
        std::uint64_t comparisons = 0;
        baseline_scan_identify(patterns, patterns[0], &comparisons);
        point.baseline_ops = comparisons;
    } else {
        point.baseline_ops =
            static_cast<std::uint64_t>(dims.pattern_length) * dims.pattern_count;
    }
    return point;
}

struct ExperimentConfig {
    Dimensions dims;
    double noise_start = 0.0;
    double noise_end = 0.0;
    std::uint32_t steps = 1;  // grid points, inclusive of both ends
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    NoiseModel model = NoiseModel::kDistinctColor;
    unsigned threads = 1;
    bool measure_baseline = false;

    void validate() const {
        dims.validate();
        if (steps < 1) detail::fail("ExperimentConfig: at least one grid step required");
        if (trials < 1) detail::fail("ExperimentConfig: at least one trial required");
        if (!(noise_start >= 0.0 && noise_start <= noise_end && noise_end <= 1.0)) {
            detail::fail("ExperimentConfig: need 0 <= start <= end <= 1");
        }
    }

    double noise_at(std::uint32_t step) const {
        if (steps == 1) {
            return noise_start;
        }
        if (step + 1 == steps) {
            return noise_end;
        }
        return noise_start +
               static_cast<double>(step) * (noise_end - noise_start) /
                   static_cast<double>(steps - 1);
    }
};

/// Evaluates run_point over the uniform noise grid. Point p draws from
/// substream_key(cfg.seed, p); output order matches grid order.
inline std::vector<CurvePoint> sweep_noise(const ExperimentConfig& cfg,
                                           const IdentifyEngine& engine,
                                           std::span<const QPattern> patterns) {
    cfg.validate();
    std::vector<CurvePoint> points;
    points.reserve(cfg.steps);
    for (std::uint32_t p = 0; p < cfg.steps; ++p) {
        points.push_back(run_point(engine, patterns, cfg.noise_at(p), cfg.trials,
                                   substream_key(cfg.seed, p), cfg.threads, cfg.model,
                                   cfg.measure_baseline));
    }
    return points;
}

/// Exhaustive nearest-neighbor search: index of the stored pattern with the
/// largest overlap, ties to the smallest index. Always compares all N*M
/// symbols; `comparisons` (optional) counts them.
inline std::uint64_t baseline_scan_identify(std::span<const QPattern> patterns,
                                            const QPattern& probe,
                                            std::uint64_t* comparisons = nullptr) {
    if (patterns.empty()) {
        detail::fail("baseline_scan_identify: empty pattern set");
    }
    std::uint64_t best_index = 0;
    std::uint64_t best_overlap = 0;
    bool first = true;
    for (std::size_t mu = 0; mu < patterns.size(); ++mu) {
        const std::uint64_t hits = overlap(probe, patterns[mu]);
        if (comparisons != nullptr) {
            *comparisons += patterns[mu].length();
        }
        if (first || hits > best_overlap) {
            best_overlap = hits;
            best_index = mu;
            first = false;
        }
    }
    return best_index;
}

/// One row of the engine cost comparison.
struct ComparePoint {
    double noise = 0.0;
    std::uint64_t perceptron_ops = 0;
    std::uint64_t baseline_ops = 0;
    double perceptron_us_median = 0.0;
    double baseline_us_median = 0.0;
};

struct CompareReport {
    std::vector<ComparePoint> points;
    /// Column kept for table compatibility; no such engine exists here.
    std::string_view stack_status = "not implemented";
};

/// Measures both retrieval routes across the noise grid: instrumented
/// per-probe operation counts (perceptron cost is flat in noise) and median
/// wall-clock per probe over cfg.trials repetitions.
inline CompareReport compare_engines(const ExperimentConfig& cfg, const IdentifyEngine& engine,
                                     std::span<const QPattern> patterns) {
    cfg.validate();
    if (patterns.size() != engine.dims().pattern_count || patterns.empty()) {
        detail::fail("compare_engines: pattern set does not match engine dimensions");
    }
    using clock = std::chrono::steady_clock;
    const Dimensions& dims = engine.dims();
    CompareReport report;
    report.points.reserve(cfg.steps);
    std::vector<Symbol> probe(dims.pattern_length);
    std::vector<std::uint32_t> positions;
    for (std::uint32_t p = 0; p < cfg.steps; ++p) {
        ComparePoint row;
        row.noise = cfg.noise_at(p);
        const std::uint64_t point_seed = substream_key(cfg.seed, p);
        std::vector<double> engine_us;
        std::vector<double> scan_us;
        engine_us.reserve(cfg.trials);
        scan_us.reserve(cfg.trials);
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            SplitMix64 rng(substream_key(point_seed, t));
            const std::uint64_t mu = rng.below(patterns.size());
            detail::distort_into(patterns[mu].symbols(), probe, dims.alphabet_size, row.noise,
                                 cfg.model, rng, positions);
            const QPattern probe_pattern = QPattern::trusted(
                dims.alphabet_size, std::vector<Symbol>(probe.begin(), probe.end()));

            OpCounts ops;
            auto t0 = clock::now();
            engine.identify(probe, t == 0 ? &ops : nullptr);
            auto t1 = clock::now();
            engine_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
            if (t == 0) {
                row.perceptron_ops = ops.accumulations;
            }

            std::uint64_t scans = 0;
            t0 = clock::now();
            baseline_scan_identify(patterns, probe_pattern, t == 0 ? &scans : nullptr);
            t1 = clock::now();
            scan_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
            if (t == 0) {
                row.baseline_ops = scans;
            }
        }
        auto median = [](std::vector<double>& v) {
            std::sort(v.begin(), v.end());
            const std::size_t mid = v.size() / 2;
            return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
        };
        row.perceptron_us_median = median(engine_us);
        row.baseline_us_median = median(scan_us);
        report.points.push_back(row);
    }
    return report;
}

/// Uniform random pattern set; pattern mu draws from substream_key(seed, mu).
inline std::vector<QPattern> random_patterns(const Dimensions& dims, std::uint64_t seed) {
    dims.validate();
    std::vector<QPattern> patterns;
    patterns.reserve(dims.pattern_count);
    for (std::uint64_t mu = 0; mu < dims.pattern_count; ++mu) {
        SplitMix64 rng(substream_key(seed, mu));
        std::vector<Symbol> symbols(dims.pattern_length);
        for (auto& s : symbols) {
            s = static_cast<Symbol>(rng.below(dims.alphabet_size));
        }
        patterns.push_back(QPattern::trusted(dims.alphabet_size, std::move(symbols)));
    }
    return patterns;
}

/// Keys every pattern by its position: key of pattern mu is encode_key(mu).
inline std::vector<KeyVector> positional_keys(const Dimensions& dims) {
    dims.validate();
    std::vector<KeyVector> keys;
    keys.reserve(dims.pattern_count);
    for (std::uint64_t mu = 0; mu < dims.pattern_count; ++mu) {
        keys.push_back(encode_key(mu, dims));
    }
    return keys;
}

}  // namespace qvam
