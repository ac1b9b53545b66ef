#include "dtnt/cli.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "dtnt/checkpoint.hpp"
#include "dtnt/error.hpp"
#include "dtnt/eval.hpp"
#include "dtnt/infer.hpp"
#include "dtnt/io.hpp"
#include "dtnt/optim.hpp"
#include "dtnt/rng.hpp"
#include "dtnt/synmotion.hpp"
#include "dtnt/version.hpp"

namespace dtnt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- plumbing

struct Progress {
    bool quiet = false;
    void operator()(const std::string& line) const {
        if (!quiet) std::cout << line << "\n";
    }
};

json load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

// Single-writer guard per output directory.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        if (fs::exists(path_)) {
            throw IoError("output directory is locked by another run: " + path_.string());
        }
        std::ofstream lock(path_);
        lock << "pid " << ::getpid() << "\n";
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Run metadata. The wall-clock duration varies between runs; everything
// else is reproducible, so byte-level comparisons skip this one file.
void write_run_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                        const json& extra, double duration_ms) {
    json m;
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["config"] = config;
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    m["duration_ms"] = duration_ms;
    write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::string format_csv_row(std::initializer_list<std::string> fields) {
    std::string row;
    for (const auto& f : fields) {
        if (!row.empty()) row += ',';
        row += f;
    }
    row += '\n';
    return row;
}

// ------------------------------------------------------------- ingestion

MotionSpec parse_motion_spec(const json& j, std::uint64_t master_seed, std::size_t index) {
    MotionSpec spec;
    spec.kind = parse_motion_kind(require<std::string>(j, "kind"));
    spec.template_kind = parse_template_kind(get_or<std::string>(j, "template", "grid_slab"));
    spec.frames = get_or<int>(j, "frames", 4);
    spec.points = get_or<int>(j, "points", 2000);
    spec.amplitude = get_or<double>(j, "amplitude", 0.3);
    spec.seed = get_or<std::uint64_t>(j, "seed", mix_seed(master_seed, 0x5eed00 + index));
    spec.pose_start = get_or<std::vector<double>>(j, "pose_start", {});
    spec.pose_end = get_or<std::vector<double>>(j, "pose_end", {});
    return spec;
}

CorruptionSpec parse_corruption_spec(const json& j, std::uint64_t master_seed, std::size_t index) {
    CorruptionSpec c;
    c.noise_sigma = get_or<double>(j, "noise_sigma", 0.0);
    c.partial_count = get_or<int>(j, "partial_count", 0);
    c.seed = get_or<std::uint64_t>(j, "seed", mix_seed(master_seed, 0xc0de00 + index));
    return c;
}

std::string corruption_dir_name(const CorruptionSpec& c) {
    std::string name;
    if (c.noise_sigma > 0.0) name += "noisy_" + format_double(c.noise_sigma);
    if (c.partial_count > 0) {
        if (!name.empty()) name += "_";
        name += "partial_" + std::to_string(c.partial_count);
    }
    return name.empty() ? "clean" : name;
}

TrainConfig parse_train_config(const json& j, const GlobalOptions& opts) {
    TrainConfig config;
    config.learning_rate = get_or<double>(j, "learning_rate", config.learning_rate);
    config.batch_size = get_or<int>(j, "batch_size", config.batch_size);
    config.iterations = get_or<int>(j, "iterations", config.iterations);
    config.dz = get_or<int>(j, "dz", config.dz);
    config.points_per_frame = get_or<int>(j, "points_per_frame", config.points_per_frame);
    config.seed = opts.seed.value_or(get_or<std::uint64_t>(j, "seed", 0));
    config.omega_init = get_or<double>(j, "omega_init", config.omega_init);
    config.layer_widths = get_or<std::vector<int>>(j, "layer_widths", config.layer_widths);
    config.optimize_omega = get_or<bool>(j, "optimize_omega", true);
    config.checkpoint_every = get_or<int>(j, "checkpoint_every", 0);
    validate_config(config);
    return config;
}

InferenceConfig parse_infer_config(const json& j, const GlobalOptions& opts) {
    InferenceConfig config;
    config.iterations = get_or<int>(j, "iterations", config.iterations);
    config.learning_rate = get_or<double>(j, "learning_rate", config.learning_rate);
    config.seed = opts.seed.value_or(get_or<std::uint64_t>(j, "seed", 0));
    if (config.iterations < 1) throw ConfigError("iterations must be at least 1");
    if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    return config;
}

GroundTruthSequence subsample_sequence(const GroundTruthSequence& seq, int points_per_frame,
                                       std::uint64_t seed) {
    GroundTruthSequence out = seq;
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
        const std::size_t n = out.frames[i].points.size();
        if (n <= static_cast<std::size_t>(points_per_frame)) continue;
        Rng rng(mix_seed(seed, 0xf00d00 + i));
        const auto picked =
            rng.sample_without_replacement(n, static_cast<std::size_t>(points_per_frame));
        PointCloud reduced;
        reduced.frame_index = out.frames[i].frame_index;
        std::vector<std::size_t> provenance;
        for (std::size_t k : picked) {
            reduced.points.push_back(out.frames[i].points[k]);
            provenance.push_back(out.source_index[i][k]);
        }
        out.frames[i] = std::move(reduced);
        out.source_index[i] = std::move(provenance);
    }
    return out;
}

// Loads every sequence of a dataset tree, renormalizes, subsamples and cuts
// overlapping windows of window_frames (short sequences stay whole).
std::vector<GroundTruthSequence> prepare_windows(const fs::path& dataset_dir, int points_per_frame,
                                                 int window_frames, std::uint64_t seed,
                                                 const Progress& progress) {
    const auto seq_dirs = list_sequence_dirs(dataset_dir);
    if (seq_dirs.empty()) throw DatasetError(dataset_dir.string() + ": no seq_* directories");

    std::vector<GroundTruthSequence> windows;
    for (std::size_t si = 0; si < seq_dirs.size(); ++si) {
        GroundTruthSequence seq = load_sequence_dir(seq_dirs[si]);
        // ingestion normalization over the union of the sequence's frames
        const NormTransform ingest = fit_unit_cube(seq.frames);
        for (PointCloud& f : seq.frames) f = apply_transform(f, ingest);
        seq = subsample_sequence(seq, points_per_frame, mix_seed(seed, 0x5a17 + si));

        const std::size_t frames = seq.frames.size();
        if (frames < static_cast<std::size_t>(window_frames)) {
            windows.push_back(std::move(seq));
        } else {
            for (std::size_t start = 0; start + window_frames <= frames; ++start) {
                windows.push_back(slice_window(seq, start, static_cast<std::size_t>(window_frames)));
            }
        }
    }
    progress("prepared " + std::to_string(windows.size()) + " training windows from " +
             std::to_string(seq_dirs.size()) + " sequences");
    return windows;
}

std::ofstream open_csv(const fs::path& path, const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << header << "\n";
    return out;
}

void save_model(const fs::path& path, const TrainedModel& model) {
    save_checkpoint(path, model_to_checkpoint(model));
}

}  // namespace

// ---------------------------------------------------------------- generate

int run_generate(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const std::uint64_t master_seed = opts.seed.value_or(get_or<std::uint64_t>(config, "seed", 0));
    const fs::path out_dir = opts.out.value_or(require<std::string>(config, "out"));
    const bool windows = get_or<bool>(config, "windows", false);
    Progress progress{opts.quiet};

    if (!config.contains("sequences") || !config.at("sequences").is_array() ||
        config.at("sequences").empty()) {
        throw ConfigError("field 'sequences' must be a nonempty array");
    }
    std::vector<MotionSpec> specs;
    for (std::size_t i = 0; i < config.at("sequences").size(); ++i) {
        specs.push_back(parse_motion_spec(config.at("sequences")[i], master_seed, i));
    }
    std::vector<CorruptionSpec> corruptions;
    if (config.contains("corruptions")) {
        for (std::size_t i = 0; i < config.at("corruptions").size(); ++i) {
            corruptions.push_back(parse_corruption_spec(config.at("corruptions")[i], master_seed, i));
        }
    }

    DirLock lock(out_dir);
    make_dataset(specs, windows, out_dir / "clean");
    progress("wrote clean tree with " + std::to_string(specs.size()) + " sequences");
    json variant_names = json::array({"clean"});
    for (const CorruptionSpec& c : corruptions) {
        const std::string name = corruption_dir_name(c);
        if (name == "clean") continue;  // identity corruption adds nothing
        make_dataset(specs, windows, out_dir / name, &c);
        variant_names.push_back(name);
        progress("wrote " + name + " tree");
    }

    write_run_manifest(out_dir, "generate", config, {{"variants", variant_names}},
                       clock.elapsed_ms());
    return kExitOk;
}

// ------------------------------------------------------------------- train

int run_train(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const fs::path dataset_dir = require<std::string>(config, "dataset");
    const fs::path out_dir = opts.out.value_or(require<std::string>(config, "out"));
    const TrainConfig train_config = parse_train_config(config, opts);
    const int window_frames = get_or<int>(config, "window_frames", 4);
    if (window_frames < 2) throw ConfigError("window_frames must be at least 2");
    Progress progress{opts.quiet};

    const auto windows = prepare_windows(dataset_dir, train_config.points_per_frame, window_frames,
                                         train_config.seed, progress);
    std::vector<std::vector<PointCloud>> sequences;
    sequences.reserve(windows.size());
    for (const auto& w : windows) sequences.push_back(w.frames);

    if (static_cast<std::size_t>(train_config.batch_size) > sequences.size()) {
        std::cerr << "warning: batch_size " << train_config.batch_size << " clamped to "
                  << sequences.size() << " windows\n";
    }

    DirLock lock(out_dir);
    std::ofstream log_csv = open_csv(out_dir / "train_log.csv", "iteration,loss,omega");
    const auto log = [&](std::int64_t iteration, double loss, double omega) {
        log_csv << iteration << ',' << format_double(loss) << ',' << format_double(omega) << '\n';
        log_csv.flush();
        if (iteration % 100 == 0 || iteration == 1) {
            progress("iteration " + std::to_string(iteration) + " loss " + format_double(loss));
        }
    };
    const auto checkpoint = [&](std::int64_t, const TrainedModel& model) {
        save_model(out_dir / "model.ckpt", model);
    };

    std::int64_t start_iteration = 0;
    TrainedModel model;
    if (config.contains("resume") && !config.at("resume").is_null()) {
        const fs::path resume_dir = config.at("resume").get<std::string>();
        const Checkpoint ckpt = load_checkpoint(resume_dir / "model.ckpt");
        if (ckpt.dz != train_config.dz) {
            throw ConfigMismatchError("resume checkpoint has dz " + std::to_string(ckpt.dz) +
                                      " but config asks for " + std::to_string(train_config.dz));
        }
        TrainedModel resumed = checkpoint_to_model(ckpt);
        if (resumed.config.layer_widths != train_config.layer_widths) {
            throw ConfigMismatchError("resume checkpoint layer widths differ from config");
        }
        if (resumed.banks.size() != sequences.size()) {
            throw ConfigMismatchError("resume checkpoint bank count " +
                                      std::to_string(resumed.banks.size()) +
                                      " does not match window count " +
                                      std::to_string(sequences.size()));
        }
        const json prior = json::parse(read_text_file(resume_dir / "manifest.json"));
        start_iteration = get_or<std::int64_t>(prior, "iterations_done", 0);
        resumed.config = train_config;
        model = train_from(std::move(resumed), sequences, train_config, log, checkpoint,
                           start_iteration);
    } else {
        model = train(sequences, train_config, log, checkpoint, start_iteration);
    }

    save_model(out_dir / "model.ckpt", model);
    progress("trained " + std::to_string(model.iterations_done) + " iterations, omega " +
             format_double(model.omega));

    write_run_manifest(out_dir, "train", config,
                       {{"windows", sequences.size()},
                        {"iterations_done", model.iterations_done},
                        {"final_omega", model.omega}},
                       clock.elapsed_ms());
    return kExitOk;
}

// ------------------------------------------------------------- track

namespace {

struct LoadedModel {
    TrainedModel model;
};

LoadedModel load_model_for(const json& config) {
    const fs::path ckpt_path = require<std::string>(config, "checkpoint");
    if (!fs::exists(ckpt_path)) throw IoError("checkpoint not found: " + ckpt_path.string());
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (config.contains("dz") && config.at("dz").get<int>() != ckpt.dz) {
        throw ConfigMismatchError("checkpoint dz " + std::to_string(ckpt.dz) +
                                  " does not match config dz " +
                                  std::to_string(config.at("dz").get<int>()));
    }
    return {checkpoint_to_model(ckpt)};
}

}  // namespace

int run_track(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const fs::path sequence_dir = require<std::string>(config, "sequence");
    const fs::path out_dir = opts.out.value_or(require<std::string>(config, "out"));
    const InferenceConfig infer_config = parse_infer_config(config, opts);
    Progress progress{opts.quiet};

    auto [model] = load_model_for(config);
    std::vector<PointCloud> frames = load_frames_dir(sequence_dir);
    if (frames.size() < 2) throw DatasetError(sequence_dir.string() + ": need at least 2 frames");

    const NormTransform ingest = fit_unit_cube(frames);
    for (PointCloud& f : frames) f = apply_transform(f, ingest);

    DirLock lock(out_dir);
    const TrackingResult result = track(model, frames, infer_config);

    std::ofstream pairs_csv = open_csv(out_dir / "pairs.csv", "pair_index,chamfer");
    for (std::size_t i = 0; i < result.transformed.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "transformed_%04zu.xyz", i + 2);
        write_xyz(out_dir / name, invert_transform(result.transformed[i], ingest));
        std::snprintf(name, sizeof(name), "corr_%04zu.corr", i + 1);
        write_corr(out_dir / name, result.maps[i].match);
        pairs_csv << (i + 1) << ',' << format_double(result.pair_chamfer[i]) << '\n';
    }
    save_latents(out_dir / "latents.latents", result.bank);
    progress("tracked " + std::to_string(result.transformed.size()) + " pairs");

    write_run_manifest(out_dir, "track", config,
                       {{"pairs", result.transformed.size()},
                        {"normalization",
                         {{"center", {ingest.center.x(), ingest.center.y(), ingest.center.z()}},
                          {"scale", ingest.scale}}}},
                       clock.elapsed_ms());
    return kExitOk;
}

int run_forecast(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const fs::path sequence_dir = require<std::string>(config, "sequence");
    const fs::path out_dir = opts.out.value_or(require<std::string>(config, "out"));
    InferenceConfig infer_config = parse_infer_config(config, opts);
    infer_config.forecast = true;
    Progress progress{opts.quiet};

    auto [model] = load_model_for(config);
    std::vector<PointCloud> frames = load_frames_dir(sequence_dir);
    if (frames.size() != 3) {
        throw ProtocolError("forecast needs exactly 3 observed frames, found " +
                            std::to_string(frames.size()));
    }

    const NormTransform ingest = fit_unit_cube(frames);
    for (PointCloud& f : frames) f = apply_transform(f, ingest);

    DirLock lock(out_dir);
    const PointCloud prediction = forecast(model, frames, infer_config);
    write_xyz(out_dir / "forecast_0004.xyz", invert_transform(prediction, ingest));
    progress("forecast written");

    write_run_manifest(out_dir, "forecast", config,
                       {{"normalization",
                         {{"center", {ingest.center.x(), ingest.center.y(), ingest.center.z()}},
                          {"scale", ingest.scale}}}},
                       clock.elapsed_ms());
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int run_evaluate(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const fs::path result_dir = require<std::string>(config, "result");
    const fs::path dataset_dir = require<std::string>(config, "dataset");
    const fs::path out_dir = opts.out.value_or(get_or<std::string>(config, "out", result_dir.string()));
    const std::vector<double> thresholds =
        get_or<std::vector<double>>(config, "thresholds", default_thresholds());
    Progress progress{opts.quiet};

    const GroundTruthSequence gt = load_sequence_dir(dataset_dir);

    TrackingResult result;
    for (std::size_t i = 0; i + 1 < gt.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "transformed_%04zu.xyz", i + 2);
        const fs::path cloud_path = result_dir / name;
        std::snprintf(name, sizeof(name), "corr_%04zu.corr", i + 1);
        const fs::path corr_path = result_dir / name;
        if (!fs::exists(cloud_path) || !fs::exists(corr_path)) {
            throw ProtocolError("result dir is missing pair " + std::to_string(i + 1) +
                                " artifacts (" + cloud_path.string() + ")");
        }
        result.transformed.push_back(read_xyz(cloud_path));
        CorrespondenceMap map;
        map.source_frame = static_cast<int>(i);
        map.target_frame = static_cast<int>(i) + 1;
        map.match = read_corr(corr_path);
        result.maps.push_back(std::move(map));
    }

    const TrackingEvaluation eval = evaluate_tracking(result, gt, thresholds);

    std::ofstream metrics = open_csv(out_dir / "metrics.csv", "pair,chamfer,corr_l2");
    for (std::size_t i = 0; i < eval.per_pair.size(); ++i) {
        metrics << (i + 1) << ',' << format_double(eval.per_pair[i].chamfer) << ','
                << format_double(eval.per_pair[i].correspondence_l2) << '\n';
    }
    metrics << "mean," << format_double(eval.aggregate.chamfer) << ','
            << format_double(eval.aggregate.correspondence_l2) << '\n';

    std::ofstream curve = open_csv(out_dir / "accuracy_curve.csv", "threshold,fraction");
    for (const auto& [tau, frac] : eval.aggregate.accuracy_curve) {
        curve << format_double(tau) << ',' << format_double(frac) << '\n';
    }
    progress("mean chamfer " + format_double(eval.aggregate.chamfer) + ", mean corr_l2 " +
             format_double(eval.aggregate.correspondence_l2));

    write_run_manifest(out_dir, "evaluate", config,
                       {{"pairs", eval.per_pair.size()},
                        {"mean_chamfer", eval.aggregate.chamfer},
                        {"mean_corr_l2", eval.aggregate.correspondence_l2}},
                       clock.elapsed_ms());
    return kExitOk;
}

// ------------------------------------------------------------------ ablate

int run_ablate(const fs::path& config_path, const GlobalOptions& opts) {
    Stopwatch clock;
    const json config = load_config(config_path);
    const fs::path dataset_dir = require<std::string>(config, "dataset");
    const fs::path out_dir = opts.out.value_or(require<std::string>(config, "out"));
    TrainConfig train_config = parse_train_config(config, opts);
    const int window_frames = get_or<int>(config, "window_frames", 4);
    InferenceConfig infer_config;
    infer_config.iterations = get_or<int>(config, "eval_iterations", 1000);
    infer_config.learning_rate = train_config.learning_rate;
    infer_config.seed = train_config.seed;
    const std::vector<double> thresholds =
        get_or<std::vector<double>>(config, "thresholds", default_thresholds());
    Progress progress{opts.quiet};

    const auto windows = prepare_windows(dataset_dir, train_config.points_per_frame, window_frames,
                                         train_config.seed, progress);
    std::vector<std::vector<PointCloud>> sequences;
    sequences.reserve(windows.size());
    for (const auto& w : windows) sequences.push_back(w.frames);

    DirLock lock(out_dir);

    struct Variant {
        std::string name;
        TrainConfig config;
    };
    // both variants share the seed; the non-temporal one pins omega at 1 so
    // the recurrence collapses to z_i = s_i
    TrainConfig non_temporal = train_config;
    non_temporal.omega_init = 1.0;
    non_temporal.optimize_omega = false;
    const std::vector<Variant> variants = {{"temporal", train_config},
                                           {"non_temporal", non_temporal}};

    std::ofstream csv = open_csv(out_dir / "ablation.csv", "model,chamfer,corr_l2");
    json summary = json::array();
    for (const Variant& variant : variants) {
        progress("training " + variant.name + " model");
        const TrainedModel model = train(sequences, variant.config);
        save_model(out_dir / ("model_" + variant.name + ".ckpt"), model);

        double mean_chamfer = 0.0, mean_l2 = 0.0;
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const TrackingResult result = track(model, windows[w].frames, infer_config);
            const TrackingEvaluation eval = evaluate_tracking(result, windows[w], thresholds);
            mean_chamfer += eval.aggregate.chamfer;
            mean_l2 += eval.aggregate.correspondence_l2;
        }
        mean_chamfer /= static_cast<double>(windows.size());
        mean_l2 /= static_cast<double>(windows.size());

        csv << variant.name << ',' << format_double(mean_chamfer) << ',' << format_double(mean_l2)
            << '\n';
        summary.push_back({{"model", variant.name},
                           {"chamfer", mean_chamfer},
                           {"corr_l2", mean_l2},
                           {"omega", model.omega}});
        progress(variant.name + ": chamfer " + format_double(mean_chamfer) + ", corr_l2 " +
                 format_double(mean_l2));
    }

    write_run_manifest(out_dir, "ablate", config, {{"models", summary}}, clock.elapsed_ms());
    return kExitOk;
}

}  // namespace dtnt::cli
