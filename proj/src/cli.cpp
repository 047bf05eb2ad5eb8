#include "pcdream/cli.hpp"

#include "pcdream/classifier.hpp"
#include "pcdream/dreamer.hpp"
#include "pcdream/io.hpp"
#include "pcdream/metrics.hpp"
#include "pcdream/rng.hpp"
#include "pcdream/synthgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace pcdream::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------
// gen-data

struct GenDataArgs {
    std::string out_dir;
    std::size_t per_class = 200;
    std::size_t points = 1024;
    double jitter = 0.01;
    double train_frac = 0.8;
    std::uint64_t seed = 0;
};

int run_gen_data(const GenDataArgs& args) {
    DatasetSpec spec;
    spec.per_class = args.per_class;
    spec.points_per_cloud = args.points;
    spec.jitter_sigma = args.jitter;
    spec.train_fraction = args.train_frac;
    spec.seed = args.seed;
    const Dataset ds = build_dataset(spec);

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);

    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["spec"] = {{"per_class", spec.per_class},
                        {"points", spec.points_per_cloud},
                        {"jitter", spec.jitter_sigma},
                        {"train_frac", spec.train_fraction},
                        {"seed", spec.seed}};
    manifest["labels"] = ds.labels;

    std::vector<std::size_t> per_label_counter(ds.labels.size(), 0);
    ordered_json files = ordered_json::array();
    auto emit = [&](const LabeledCloud& lc, const char* split) {
        const std::string& label = ds.labels[static_cast<std::size_t>(lc.label)];
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04zu.xyz", label.c_str(),
                      per_label_counter[static_cast<std::size_t>(lc.label)]++);
        write_file_atomic(dir / name, write_xyz(lc.cloud));
        files.push_back({{"file", name},
                         {"label", label},
                         {"label_index", lc.label},
                         {"split", split}});
    };
    for (const LabeledCloud& lc : ds.train) emit(lc, "train");
    for (const LabeledCloud& lc : ds.test) emit(lc, "test");
    manifest["files"] = std::move(files);

    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test clouds to "
              << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// manifest loading (shared by train)

struct ManifestData {
    std::vector<LabeledCloud> train;
    std::vector<LabeledCloud> test;
    std::vector<std::string> labels;
};

ManifestData load_manifest(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_file(manifest_path));
    } catch (const ordered_json::parse_error& e) {
        throw std::runtime_error("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (doc.at("format_version").get<int>() != 1) {
        throw std::runtime_error("unsupported manifest format version");
    }

    ManifestData data;
    data.labels = doc.at("labels").get<std::vector<std::string>>();
    for (const auto& entry : doc.at("files")) {
        LabeledCloud lc;
        lc.label = entry.at("label_index").get<int>();
        if (lc.label < 0 || static_cast<std::size_t>(lc.label) >= data.labels.size()) {
            throw std::runtime_error("manifest label_index out of range");
        }
        lc.cloud = parse_xyz(read_file(dir / entry.at("file").get<std::string>()));
        const std::string split = entry.at("split").get<std::string>();
        (split == "train" ? data.train : data.test).push_back(std::move(lc));
    }
    return data;
}

// ---------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data_dir;
    std::string out_path;
    std::size_t epochs = 30;
    double lr = 1e-3;
    std::size_t batch = 32;
    std::uint64_t seed = 0;
};

int run_train(const TrainArgs& args) {
    const ManifestData data = load_manifest(args.data_dir);
    if (data.train.empty()) {
        throw std::runtime_error("manifest lists no training clouds");
    }

    ModelConfig mcfg;
    mcfg.class_count = data.labels.size();
    mcfg.head_widths.back() = mcfg.class_count;
    mcfg.init_seed = args.seed;

    TrainConfig tcfg;
    tcfg.epochs = args.epochs;
    tcfg.batch_size = args.batch;
    tcfg.learning_rate = static_cast<float>(args.lr);
    tcfg.seed = args.seed;

    std::cout << "epoch,loss,train_acc\n";
    const TrainResult result =
        train(data.train, mcfg, tcfg, data.labels, [](std::size_t epoch, const EpochStats& s) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", epoch, s.loss, s.accuracy);
            std::cout << buf << std::flush;
        });

    write_file_atomic(args.out_path, save_checkpoint(result.model));
    return 0;
}

// ---------------------------------------------------------------------
// dream / add

struct DreamArgs {
    std::string model_path;
    std::vector<std::string> inputs;
    std::vector<std::string> places;
    std::string target;
    double gamma = 0.05;
    std::size_t iters = 50;
    std::size_t period = 5;
    std::size_t max_points = 0; // 0 = 4x input count
    std::string union_mode = "original";
    std::size_t snapshot_every = 0;
    std::size_t points = 1024;
    bool points_given = false;
    std::string out_path;
    std::string trace_path;
    std::uint64_t seed = 0;
};

Placement parse_placement(const std::string& text) {
    Placement p;
    char extra;
    const int n = std::sscanf(text.c_str(), "%f,%f,%f,%f%c", &p.scale, &p.dx, &p.dy, &p.dz, &extra);
    if (n != 4) {
        throw std::invalid_argument("bad --place '" + text + "' (expected SCALE,DX,DY,DZ)");
    }
    return p;
}

int resolve_target(const Model& model, const std::string& name) {
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        if (model.labels[i] == name) return static_cast<int>(i);
    }
    std::string valid;
    for (const std::string& l : model.labels) {
        if (!valid.empty()) valid += ", ";
        valid += l;
    }
    throw std::invalid_argument("unknown target '" + name + "'; valid targets: " + valid);
}

PointCloud load_dream_input(const DreamArgs& args) {
    if (!args.places.empty() && args.places.size() != args.inputs.size()) {
        throw std::invalid_argument("--place count must match --input count");
    }
    std::vector<PointCloud> clouds;
    std::vector<Placement> placements;
    for (std::size_t i = 0; i < args.inputs.size(); ++i) {
        const fs::path path(args.inputs[i]);
        if (path.extension() == ".off" && !args.points_given) {
            std::cerr << "note: sampling " << args.points << " surface points from "
                      << path.string() << " (default --points)\n";
        }
        PointCloud pc = read_cloud_file(path, args.points, derive_seed(args.seed, 7000 + i));
        clouds.push_back(normalize_unit_sphere(pc));
        placements.push_back(args.places.empty() ? Placement{} : parse_placement(args.places[i]));
    }
    return normalize_unit_sphere(amalgamate_inputs(clouds, placements));
}

fs::path snapshot_path(const fs::path& out, std::size_t iter) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_iter%04zu.ply", iter);
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

int run_dream(const DreamArgs& args, bool amalgamated) {
    const Model model = load_checkpoint(read_file(args.model_path));
    const int target = resolve_target(model, args.target);
    const PointCloud input = load_dream_input(args);

    DreamConfig cfg;
    cfg.gamma = static_cast<float>(args.gamma);
    cfg.iters = args.iters;
    cfg.target = target;
    cfg.period = args.period;
    cfg.max_points = args.max_points > 0 ? args.max_points : 4 * input.count();
    if (args.union_mode == "original") {
        cfg.union_mode = UnionMode::WithOriginal;
    } else if (args.union_mode == "previous") {
        cfg.union_mode = UnionMode::WithPrevious;
    } else {
        throw std::invalid_argument("--union must be 'original' or 'previous'");
    }
    cfg.seed = args.seed;
    cfg.snapshot_period = args.snapshot_every;

    const DreamResult result =
        amalgamated ? add_run(model, input, cfg) : deepdream_naive(model, input, cfg);

    write_file_atomic(args.out_path, write_ply(result.cloud));
    if (!args.trace_path.empty()) {
        write_file_atomic(args.trace_path, trace_to_csv(result.trace));
    }
    for (const auto& [iter, cloud] : result.trace.snapshots) {
        write_file_atomic(snapshot_path(args.out_path, iter), write_ply(cloud));
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: %zu -> %zu points, target %s logit %.6g -> %.6g\n",
                  result.trace.algorithm.c_str(), input.count(), result.cloud.count(),
                  args.target.c_str(), static_cast<double>(result.trace.initial_logit),
                  result.trace.records.empty()
                      ? static_cast<double>(result.trace.initial_logit)
                      : static_cast<double>(result.trace.records.back().target_logit));
    std::cout << buf;
    return 0;
}

// ---------------------------------------------------------------------
// metrics

struct MetricsArgs {
    std::string input_path;
    std::string naive_path;
    std::string add_path;
    std::string model_path;
    std::string target;
    double eps = 0.05;
    std::string out_path;
    std::uint64_t seed = 0;
};

int run_metrics(const MetricsArgs& args) {
    const Model model = load_checkpoint(read_file(args.model_path));
    const int target = resolve_target(model, args.target);
    // The dream pipeline normalizes its input, so apply the same frame here.
    const PointCloud input =
        normalize_unit_sphere(read_cloud_file(args.input_path, 1024, args.seed));
    const PointCloud naive_out = read_cloud_file(args.naive_path, 1024, args.seed);
    const PointCloud add_out = read_cloud_file(args.add_path, 1024, args.seed);

    const CompareResult result = compare_runs(input, naive_out, add_out, model, target, args.eps);
    write_file_atomic(args.out_path, compare_to_json(result, args.target, args.eps));
    std::cout << "verdict=" << result.verdict << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// convert

struct ConvertArgs {
    std::string in_path;
    std::string out_path;
    std::size_t points = 1024;
    bool points_given = false;
    std::uint64_t seed = 0;
};

int run_convert(const ConvertArgs& args) {
    const fs::path in(args.in_path);
    if (in.extension() == ".off" && !args.points_given) {
        std::cerr << "note: sampling " << args.points << " surface points from " << in.string()
                  << " (default --points)\n";
    }
    const PointCloud pc = read_cloud_file(in, args.points, args.seed);

    const fs::path out(args.out_path);
    if (out.extension() == ".xyz") {
        write_file_atomic(out, write_xyz(pc));
    } else if (out.extension() == ".ply") {
        write_file_atomic(out, write_ply(pc));
    } else {
        throw std::invalid_argument("unrecognized output extension '" + out.extension().string() +
                                    "' (expected .xyz or .ply)");
    }
    return 0;
}

void add_dream_options(CLI::App* cmd, DreamArgs& args) {
    cmd->add_option("--model", args.model_path, "checkpoint file")->required();
    cmd->add_option("--input", args.inputs, "input cloud or mesh (.xyz, .ply, .off); repeatable")
        ->required();
    cmd->add_option("--place", args.places,
                    "per-input placement SCALE,DX,DY,DZ (repeat to match --input)");
    cmd->add_option("--target", args.target, "class name whose logit is amplified")->required();
    cmd->add_option("--gamma", args.gamma, "gradient step size");
    cmd->add_option("--iters", args.iters, "number of iterations");
    cmd->add_option("--period", args.period, "downsample every K iterations (0 = never)");
    cmd->add_option("--max-points", args.max_points,
                    "downsample target point count (default 4x input)");
    cmd->add_option("--union", args.union_mode, "union partner: original | previous");
    cmd->add_option("--snapshot-every", args.snapshot_every,
                    "write a snapshot PLY every S iterations (0 = never)");
    cmd->add_option("--points", args.points, "surface samples per OFF input")
        ->each([&args](const std::string&) { args.points_given = true; });
    cmd->add_option("--out", args.out_path, "output PLY")->required();
    cmd->add_option("--trace", args.trace_path, "per-iteration trace CSV");
    cmd->add_option("--seed", args.seed, "seed for downsampling and mesh sampling");
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"point-cloud dreaming: train a set classifier, then grow new shapes from it"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a labeled synthetic dataset");
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();
    gen->add_option("--per-class", gen_args.per_class, "clouds per class");
    gen->add_option("--points", gen_args.points, "points per cloud");
    gen->add_option("--jitter", gen_args.jitter, "Gaussian jitter sigma");
    gen->add_option("--train-frac", gen_args.train_frac, "train split fraction in (0,1)");
    gen->add_option("--seed", gen_args.seed, "dataset seed");

    TrainArgs train_args;
    CLI::App* tr = app.add_subcommand("train", "train the set classifier on a dataset directory");
    tr->add_option("--data", train_args.data_dir, "dataset directory with manifest.json")
        ->required();
    tr->add_option("--out", train_args.out_path, "checkpoint output path")->required();
    tr->add_option("--epochs", train_args.epochs, "training epochs");
    tr->add_option("--lr", train_args.lr, "Adam learning rate");
    tr->add_option("--batch", train_args.batch, "batch size");
    tr->add_option("--seed", train_args.seed, "init/shuffle seed");

    DreamArgs dream_args;
    CLI::App* dream =
        app.add_subcommand("dream", "naive gradient-ascent dreaming (point count fixed)");
    add_dream_options(dream, dream_args);

    DreamArgs add_args;
    CLI::App* add = app.add_subcommand(
        "add", "amalgamated dreaming: gradient step + union with the input each iteration");
    add_dream_options(add, add_args);

    MetricsArgs metrics_args;
    CLI::App* met = app.add_subcommand("metrics", "compare naive vs amalgamated outputs");
    met->add_option("--input", metrics_args.input_path, "the dream input cloud")->required();
    met->add_option("--naive", metrics_args.naive_path, "naive dream output PLY")->required();
    met->add_option("--add", metrics_args.add_path, "amalgamated dream output PLY")->required();
    met->add_option("--model", metrics_args.model_path, "checkpoint file")->required();
    met->add_option("--target", metrics_args.target, "class name")->required();
    met->add_option("--eps", metrics_args.eps, "coverage radius");
    met->add_option("--out", metrics_args.out_path, "report JSON path")->required();

    ConvertArgs convert_args;
    CLI::App* conv = app.add_subcommand("convert", "convert between cloud/mesh file formats");
    conv->add_option("--in", convert_args.in_path, "input file (.xyz, .ply, .off)")->required();
    conv->add_option("--out", convert_args.out_path, "output file (.xyz or .ply)")->required();
    conv->add_option("--points", convert_args.points, "surface samples for OFF input")
        ->each([&convert_args](const std::string&) { convert_args.points_given = true; });
    conv->add_option("--seed", convert_args.seed, "sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e); // --help and friends
        }
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_args);
        if (tr->parsed()) return run_train(train_args);
        if (dream->parsed()) return run_dream(dream_args, false);
        if (add->parsed()) return run_dream(add_args, true);
        if (met->parsed()) return run_metrics(metrics_args);
        if (conv->parsed()) return run_convert(convert_args);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("pcdream");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace pcdream::cli
