#pragma once

/**
 * Command-line surface: gen, train, identify, sweep, theory.
 *
 * Single-shot results print as JSON, sweeps write the curve CSV plus a JSON
 * metadata sidecar with the fully resolved configuration. Every command that
 * consumes a seed is bitwise reproducible; exit status is 0 on success, 2 for
 * degenerate-parameter diagnostics and 1 for everything else.
 */

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qvam/analysis.hpp"
#include "qvam/core.hpp"
#include "qvam/experiment.hpp"
#include "qvam/io.hpp"
#include "qvam/memory.hpp"
#include "qvam/rng.hpp"

namespace qvam::cli {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDegenerate = 2;

/// Derivation tag separating a sweep's point streams from its pattern streams.
inline constexpr std::uint64_t kSweepStreamTag = 0x73776565;

namespace detail {

inline unsigned default_threads() {
    if (const char* env = std::getenv("QVAM_THREADS")) {
        char* end = nullptr;
        const unsigned long value = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && value >= 1 && value <= 4096) {
            return static_cast<unsigned>(value);
        }
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t hash = 1469598103934665603ull;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string hex64(std::uint64_t value) {
    char buffer[19];
    std::snprintf(buffer, sizeof(buffer), "0x%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

/// Reads a whitespace-separated stream of '0'/'1' characters.
inline BinaryVector read_bits_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw io::FormatError("cannot open " + path.string());
    }
    BinaryVector bits;
    char c = 0;
    while (in.get(c)) {
        if (c == '0' || c == '1') {
            bits.bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            throw io::FormatError(path.string() + ": unexpected character '" +
                                  std::string(1, c) + "' in bit stream");
        }
    }
    return bits;
}

inline ordered_json identification_json(const Identification& id, std::uint64_t probe_index) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["probe"] = probe_index;
    j["key"] = std::vector<Symbol>(id.key.digits().begin(), id.key.digits().end());
    j["index"] = id.index;
    j["valid"] = id.valid;
    j["margins"] = id.margins;
    return j;
}

inline NoiseModel parse_noise_model(const std::string& name) {
    if (name == "distinct") {
        return NoiseModel::kDistinctColor;
    }
    if (name == "any") {
        return NoiseModel::kAnyColor;
    }
    throw std::invalid_argument("unknown noise model '" + name + "' (use distinct|any)");
}

}  // namespace detail

struct GenArgs {
    std::uint32_t alphabet_size = 2;
    std::uint32_t pattern_length = 1;
    std::uint64_t pattern_count = 1;
    std::uint64_t seed = 0;
    std::string out;
};

inline int cmd_gen(const GenArgs& args, std::ostream& log) {
    const Dimensions dims =
        Dimensions::create(args.alphabet_size, args.pattern_length, args.pattern_count);
    const auto patterns = random_patterns(dims, args.seed);
    io::save_patterns(args.out, patterns);
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "gen";
    j["file"] = args.out;
    j["q"] = dims.alphabet_size;
    j["n"] = dims.pattern_length;
    j["m"] = dims.pattern_count;
    j["seed"] = args.seed;
    log << j.dump() << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string in;
    std::string out;
    std::uint32_t key_digits = 0;  // 0 = minimal for the stored count
    bool train_diagonal = false;
    unsigned threads = 1;
};

inline int cmd_train(const TrainArgs& args, std::ostream& log) {
    const auto patterns = io::load_patterns(args.in);
    const Dimensions dims = Dimensions::create(
        patterns[0].alphabet_size(), static_cast<std::uint32_t>(patterns[0].length()),
        patterns.size(), args.key_digits);
    const auto keys = positional_keys(dims);
    TrainOptions options;
    options.exclude_matching_index = !args.train_diagonal;
    options.threads = args.threads;
    const HebbNetwork net = HebbNetwork::train(patterns, keys, options);

    std::ostringstream snapshot;
    io::write_network(snapshot, net);
    const std::string bytes = snapshot.str();
    std::ofstream out(args.out, std::ios::binary);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
        throw io::FormatError("cannot write " + args.out);
    }

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "train";
    j["file"] = args.out;
    j["q"] = dims.alphabet_size;
    j["n"] = dims.pattern_length;
    j["key_digits"] = dims.key_length;
    j["m"] = dims.pattern_count;
    j["diagonal_excluded"] = net.matching_index_excluded();
    j["block_mass"] = dims.pattern_count;  // per active block, checked on save/load
    j["checksum_fnv1a"] = detail::hex64(detail::fnv1a(bytes));
    log << j.dump() << '\n';
    return kExitOk;
}

struct IdentifyArgs {
    std::string network;
    std::string probes;
    std::uint32_t binary_chunk = 0;  // 0 = probes file is QVP1
    std::string out;                 // empty = stdout
};

inline int cmd_identify(const IdentifyArgs& args, std::ostream& log) {
    const HebbNetwork net = io::load_network(args.network);
    std::vector<QPattern> probes;
    if (args.binary_chunk > 0) {
        probes.push_back(map_binary(detail::read_bits_file(args.probes), args.binary_chunk));
    } else {
        probes = io::load_patterns(args.probes);
    }

    std::ofstream file;
    if (!args.out.empty()) {
        file.open(args.out);
        if (!file) {
            throw io::FormatError("cannot open " + args.out + " for writing");
        }
    }
    std::ostream& out = args.out.empty() ? log : file;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const Identification id = net.identify(probes[p]);
        out << detail::identification_json(id, p).dump() << '\n';
    }
    return kExitOk;
}

struct SweepArgs {
    std::uint32_t alphabet_size = 2;
    std::uint32_t pattern_length = 1;
    std::uint64_t pattern_count = 1;
    std::uint32_t key_digits = 0;
    double noise_start = 0.0;
    double noise_end = 0.0;
    std::uint32_t steps = 1;
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string engine = "weights";
    std::string noise_model = "distinct";
    bool baseline = false;
    std::string out;
};

inline int cmd_sweep(const SweepArgs& args, std::ostream& log) {
    ExperimentConfig cfg;
    cfg.dims = Dimensions::create(args.alphabet_size, args.pattern_length, args.pattern_count,
                                  args.key_digits);
    cfg.noise_start = args.noise_start;
    cfg.noise_end = args.noise_end;
    cfg.steps = args.steps;
    cfg.trials = args.trials;
    cfg.seed = substream_key(args.seed, kSweepStreamTag);
    cfg.model = detail::parse_noise_model(args.noise_model);
    cfg.threads = args.threads;
    cfg.measure_baseline = args.baseline;
    cfg.validate();

    const auto patterns = random_patterns(cfg.dims, args.seed);
    const auto keys = positional_keys(cfg.dims);

    std::optional<HebbNetwork> net;
    std::optional<WeightsEngine> weights;
    std::optional<MatrixFreeEngine> matrixfree;
    const IdentifyEngine* engine = nullptr;
    if (args.engine == "weights") {
        TrainOptions options;
        options.threads = args.threads;
        net.emplace(HebbNetwork::train(patterns, keys, options));
        weights.emplace(*net);
        engine = &*weights;
    } else if (args.engine == "matrixfree") {
        matrixfree.emplace(patterns, keys);
        engine = &*matrixfree;
    } else {
        throw std::invalid_argument("unknown engine '" + args.engine +
                                    "' (use weights|matrixfree)");
    }

    const auto points = sweep_noise(cfg, *engine, patterns);

    std::ofstream csv(args.out, std::ios::binary);
    if (!csv) {
        throw io::FormatError("cannot open " + args.out + " for writing");
    }
    io::write_curve_csv(csv, points);
    csv.close();

    ordered_json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["version"] = std::string(kLibraryVersion);
    meta["command"] = "sweep";
    meta["csv"] = args.out;
    meta["q"] = cfg.dims.alphabet_size;
    meta["n"] = cfg.dims.pattern_length;
    meta["key_digits"] = cfg.dims.key_length;
    meta["m"] = cfg.dims.pattern_count;
    meta["b_start"] = cfg.noise_start;
    meta["b_end"] = cfg.noise_end;
    meta["steps"] = cfg.steps;
    meta["trials"] = cfg.trials;
    meta["seed"] = args.seed;
    meta["threads"] = cfg.threads;
    meta["engine"] = std::string(engine->name());
    meta["noise_model"] = args.noise_model;
    meta["baseline_measured"] = cfg.measure_baseline;
    const std::string meta_path = args.out + ".meta.json";
    std::ofstream meta_out(meta_path, std::ios::binary);
    if (!meta_out) {
        throw io::FormatError("cannot open " + meta_path + " for writing");
    }
    meta_out << meta.dump(2) << '\n';

    ordered_json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["command"] = "sweep";
    summary["csv"] = args.out;
    summary["meta"] = meta_path;
    summary["points"] = points.size();
    log << summary.dump() << '\n';
    return kExitOk;
}

struct TheoryArgs {
    std::uint32_t pattern_length = 1;
    std::uint64_t pattern_count = 1;
    std::uint32_t alphabet_size = 2;
    double distortion = 0.0;
    std::uint32_t key_digits = 0;
    double target_error = 0.01;
};

inline int cmd_theory(const TheoryArgs& args, std::ostream& log, std::ostream& diag) {
    const TheoryInput input =
        TheoryInput::create(args.pattern_length, args.pattern_count, args.alphabet_size,
                            args.distortion, args.target_error, args.key_digits);
    const double ne = effective_dim(input.pattern_length, input.distortion);
    ErrorEstimate estimate;
    try {
        estimate = error_probability(input);
    } catch (const NoSignalError& err) {
        diag << "no signal: " << err.what() << '\n';
        return kExitDegenerate;
    }
    const double max_patterns = capacity(input);
    const DistortionBound bound =
        critical_distortion(input.pattern_length, input.pattern_count, input.alphabet_size);
    const WorkEstimate work = op_counts(Dimensions::create(
        input.alphabet_size, input.pattern_length, input.pattern_count, input.key_length));

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "theory";
    j["inputs"] = {{"n", input.pattern_length},         {"m", input.pattern_count},
                   {"q", input.alphabet_size},          {"b", input.distortion},
                   {"key_digits", input.key_length},    {"p0", input.target_error}};
    j["effective_dim"] = ne;
    j["error_raw"] = estimate.raw;
    j["error_clamped"] = estimate.clamped;
    j["within_validity"] = estimate.within_validity;
    j["reliability_theory"] = 1.0 - estimate.clamped;
    j["capacity"] = max_patterns;
    j["critical_distortion_raw"] = bound.raw;
    j["critical_distortion"] = bound.clamped;
    if (ne >= 1.0) {
        const LayerSizeEstimate layer = max_output_neurons(ne, input.alphabet_size);
        j["max_output_neurons"] = layer.exact;
        j["max_output_neurons_ceil"] = layer.practical;
    } else {
        j["max_output_neurons"] = nullptr;
        j["max_output_neurons_ceil"] = nullptr;
    }
    j["perceptron_ops"] = work.perceptron;
    j["direct_scan_ops"] = work.direct_scan;
    log << j.dump() << '\n';
    return kExitOk;
}

/// Builds the CLI11 application and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"q-valued vector perceptron associative memory"};
    app.require_subcommand(1);
    const unsigned threads_default = detail::default_threads();

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "write a uniform random pattern set (QVP1)");
    gen_cmd->add_option("--q", gen.alphabet_size, "alphabet size (colors)")->required();
    gen_cmd->add_option("--n", gen.pattern_length, "pattern length (symbols)")->required();
    gen_cmd->add_option("--m", gen.pattern_count, "pattern count")->required();
    gen_cmd->add_option("--seed", gen.seed, "master seed");
    gen_cmd->add_option("--out", gen.out, "output pattern file")->required();

    TrainArgs train;
    train.threads = threads_default;
    auto* train_cmd = app.add_subcommand("train", "train a network from a pattern set (QVN1)");
    train_cmd->add_option("--in", train.in, "input QVP1 pattern file")->required();
    train_cmd->add_option("--out", train.out, "output QVN1 snapshot")->required();
    train_cmd->add_option("--key-digits", train.key_digits,
                          "output digits (default: minimal for the pattern count)");
    train_cmd->add_flag("--train-diagonal", train.train_diagonal,
                        "also train blocks whose output and input index coincide");
    train_cmd->add_option("--threads", train.threads, "training worker count");

    IdentifyArgs identify;
    auto* identify_cmd =
        app.add_subcommand("identify", "recall key and index for each probe");
    identify_cmd->add_option("network", identify.network, "QVN1 snapshot")->required();
    identify_cmd->add_option("probes", identify.probes,
                             "QVP1 probe file, or a 0/1 text file with --binary-chunk")
        ->required();
    identify_cmd->add_option("--binary-chunk", identify.binary_chunk,
                             "map a binary probe with this chunk width (bits per symbol)");
    identify_cmd->add_option("--out", identify.out, "write JSON lines here instead of stdout");

    SweepArgs sweep;
    sweep.threads = threads_default;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "Monte Carlo reliability curve over a noise grid (CSV)");
    sweep_cmd->add_option("--q", sweep.alphabet_size, "alphabet size")->required();
    sweep_cmd->add_option("--n", sweep.pattern_length, "pattern length")->required();
    sweep_cmd->add_option("--m", sweep.pattern_count, "pattern count")->required();
    sweep_cmd->add_option("--key-digits", sweep.key_digits, "output digits (default minimal)");
    sweep_cmd->add_option("--b-start", sweep.noise_start, "first noise level");
    sweep_cmd->add_option("--b-end", sweep.noise_end, "last noise level");
    sweep_cmd->add_option("--steps", sweep.steps, "grid points including both ends");
    sweep_cmd->add_option("--trials", sweep.trials, "trials per grid point")->required();
    sweep_cmd->add_option("--seed", sweep.seed, "master seed");
    sweep_cmd->add_option("--threads", sweep.threads, "worker count");
    sweep_cmd->add_option("--engine", sweep.engine, "weights|matrixfree");
    sweep_cmd->add_option("--noise-model", sweep.noise_model, "distinct|any");
    sweep_cmd->add_flag("--baseline", sweep.baseline,
                        "measure the exhaustive-scan baseline instead of quoting N*M");
    sweep_cmd->add_option("--out", sweep.out, "output CSV path")->required();

    TheoryArgs theory;
    auto* theory_cmd =
        app.add_subcommand("theory", "closed-form reliability, capacity and cost estimates");
    theory_cmd->add_option("--n", theory.pattern_length, "pattern length")->required();
    theory_cmd->add_option("--m", theory.pattern_count, "pattern count")->required();
    theory_cmd->add_option("--q", theory.alphabet_size, "alphabet size")->required();
    theory_cmd->add_option("--b", theory.distortion, "distortion fraction in [0, 1]");
    theory_cmd->add_option("--key-digits", theory.key_digits, "output digits (default minimal)");
    theory_cmd->add_option("--p0", theory.target_error,
                           "target error probability for the capacity bound");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("qvam");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (gen_cmd->parsed()) return cmd_gen(gen, out);
        if (train_cmd->parsed()) return cmd_train(train, out);
        if (identify_cmd->parsed()) return cmd_identify(identify, out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep, out);
        if (theory_cmd->parsed()) return cmd_theory(theory, out, err);
        err << "no subcommand selected\n";
        return kExitError;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    } catch (const NoSignalError& e) {
        err << "no signal: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

inline int run(int argc, char** argv) {
    return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace qvam::cli
