#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pointgr/synthetic.hpp"
#include "pointgr/trainer.hpp"

namespace {

using namespace pointgr;

std::string env_precision_default() {
    if (const char* env = std::getenv("PGR_PRECISION")) return env;
    return "f32";
}

void check_precision(const std::string& p) {
    if (p != "f32" && p != "f64") {
        throw ValidationError("precision must be f32 or f64, got '" + p + "'");
    }
}

std::vector<std::size_t> parse_value_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoul(item));
    }
    if (out.empty()) throw ValidationError("--values: expected a comma-separated integer list");
    return out;
}

// ---- gen-data ----

struct GenDataArgs {
    std::string task;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t per_class = 50;
    std::size_t points = 256;
    double train_fraction = 0.8;
    std::size_t rooms = 4;
    std::size_t room_points = 8000;
    std::size_t block_points = 512;
};

int cmd_gen_data(const GenDataArgs& a) {
    DatasetManifest m;
    switch (parse_task(a.task)) {
        case Task::classification:
            m = make_synthetic_classification(a.out, a.per_class, a.points, a.seed,
                                              a.train_fraction);
            break;
        case Task::partseg:
            m = make_synthetic_partseg(a.out, a.per_class, a.points, a.seed, a.train_fraction);
            break;
        case Task::sceneseg:
            m = make_synthetic_sceneseg(a.out, a.rooms, a.room_points, a.block_points, a.seed,
                                        a.train_fraction);
            break;
    }
    std::printf("wrote %zu samples (task=%s, classes=%zu, channels=%zu) under %s\n",
                m.records.size(), task_name(m.task).c_str(), m.num_classes, m.channels,
                a.out.c_str());
    return 0;
}

// ---- train ----

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::string config_path;
    std::string task;
    // flag overrides, applied on top of the config file
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> points;
    std::optional<int> k;
    std::optional<std::string> precision;
};

int cmd_train(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config_path.empty()) cfg = load_train_config(a.config_path);
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.batch) cfg.batch = *a.batch;
    if (a.lr) cfg.lr = *a.lr;
    if (a.seed) cfg.seed = *a.seed;
    if (a.points) cfg.points = *a.points;
    if (a.k) cfg.k = *a.k;
    if (a.precision) cfg.precision = *a.precision;

    LoadedDataset ds = load_dataset(a.manifest);
    if (!a.task.empty() && parse_task(a.task) != ds.manifest.task) {
        throw ValidationError("--task " + a.task + " does not match manifest task " +
                              task_name(ds.manifest.task));
    }
    const ResolvedTrainConfig rc = resolve_config(cfg, ds.manifest.task);

    TrainOutcome outcome = rc.precision == "f64" ? run_training<double>(ds, cfg, a.out)
                                                 : run_training<float>(ds, cfg, a.out);
    std::printf("%s\n", kMetricsCsvHeader);
    for (const EpochRow& row : outcome.rows) std::printf("%s\n", format_metrics_row(row).c_str());
    std::printf("checkpoint: %s.{cfg,pgrw}\nmetrics:    %s\n", outcome.checkpoint_stem.c_str(),
                outcome.csv_path.c_str());
    return 0;
}

// ---- eval ----

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "auto";
    std::size_t points = 0;
    std::uint64_t seed = 0;
    std::string json_path;
    std::string precision;
};

int cmd_eval(const EvalArgs& a) {
    LoadedDataset ds = load_dataset(a.manifest);
    std::string precision = a.precision;
    if (precision.empty()) {
        precision = load_model_config(a.checkpoint + ".cfg").precision;
        if (const char* env = std::getenv("PGR_PRECISION")) precision = env;
    }
    check_precision(precision);

    EvalOutput out = precision == "f64"
                         ? evaluate_checkpoint<double>(a.checkpoint, ds, a.split, a.points, a.seed)
                         : evaluate_checkpoint<float>(a.checkpoint, ds, a.split, a.points, a.seed);

    std::printf("%-16s %s\n", "task", task_name(ds.manifest.task).c_str());
    std::printf("%-16s %s\n", "split", out.split_used.c_str());
    std::printf("%-16s %zu\n", "samples", out.samples);
    std::printf("%-16s %.6f\n", "loss", out.mean_loss);
    std::printf("%-16s %.6f\n", "overall_acc", out.report.overall_accuracy);
    std::printf("%-16s %.6f\n", "mean_acc", out.report.mean_class_accuracy);
    std::printf("%-16s %.6f\n", "mean_iou", out.mean_iou);
    std::printf("%-16s %.6f\n", "overall_iou", out.report.overall_iou);

    std::string json_path = a.json_path.empty() ? a.checkpoint + ".eval.json" : a.json_path;
    {
        nlohmann::json j;
        j["task"] = task_name(ds.manifest.task);
        j["split"] = out.split_used;
        j["samples"] = out.samples;
        j["loss"] = out.mean_loss;
        j["overall_acc"] = out.report.overall_accuracy;
        j["mean_acc"] = out.report.mean_class_accuracy;
        j["mean_iou"] = out.mean_iou;
        j["overall_iou"] = out.report.overall_iou;
        j["per_class_iou"] = out.report.per_class_iou;
        std::ofstream f(json_path, std::ios::trunc);
        if (!f) throw IoError("cannot open " + json_path + " for writing");
        f << j.dump(2) << "\n";
    }
    return 0;
}

// ---- params ----

struct ParamsArgs {
    std::string task;
    std::size_t classes = 40;
    std::size_t channels = 0;  // 0 picks the task default
    std::size_t categories = 16;
    int k = 20;
};

int cmd_params(const ParamsArgs& a) {
    Rng rng = make_rng(1);
    Graph<float> g;
    ParamStore<float> ps(g);
    Task task = parse_task(a.task);
    ModelConfig mc;
    mc.task = task;
    mc.classes = a.classes;
    mc.channels = a.channels ? a.channels : (task == Task::sceneseg ? 9 : 3);
    mc.categories = a.categories;
    mc.k = a.k;
    if (task != Task::classification) mc.head = {256, 128};
    register_bundle(ps, mc, rng);
    std::printf("%zu\n", ps.count_trainable());
    return 0;
}

// ---- ablate ----

struct AblateArgs {
    std::string manifest;
    std::string axis;
    std::string values;
    std::string out_csv;
    std::string config_path;
    std::string work_dir = "ablate_runs";
    std::string precision;
};

int cmd_ablate(const AblateArgs& a) {
    TrainConfig cfg;
    if (!a.config_path.empty()) cfg = load_train_config(a.config_path);
    if (!a.precision.empty()) cfg.precision = a.precision;
    LoadedDataset ds = load_dataset(a.manifest);
    const ResolvedTrainConfig rc = resolve_config(cfg, ds.manifest.task);

    std::vector<std::size_t> values = parse_value_list(a.values);
    std::vector<AblateRow> rows =
        rc.precision == "f64" ? run_ablation<double>(ds, cfg, a.axis, values, a.work_dir)
                              : run_ablation<float>(ds, cfg, a.axis, values, a.work_dir);
    std::string csv = ablate_csv_text(rows);
    write_file_bytes(a.out_csv, csv);
    std::printf("%s", csv.c_str());
    return 0;
}

// ---- knn-bench ----

struct KnnBenchArgs {
    std::size_t n = 10000;
    int k = 16;
    std::string method = "both";
    std::size_t trials = 3;
    std::uint64_t seed = 0;
};

int cmd_knn_bench(const KnnBenchArgs& a) {
    if (a.method != "brute" && a.method != "indexed" && a.method != "both") {
        throw ValidationError("--method must be brute, indexed or both, got '" + a.method + "'");
    }
    Rng rng = make_rng(a.seed);
    Tensor<float> pts = random_uniform<float>(rng, {a.n, 3}, -1.0f, 1.0f);

    using clock = std::chrono::steady_clock;
    auto time_ms = [&](auto&& fn) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < a.trials; ++t) {
            auto t0 = clock::now();
            fn();
            auto t1 = clock::now();
            best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        return best;
    };

    std::printf("method,n,k,millis\n");
    NeighborGraph brute, indexed;
    if (a.method != "indexed") {
        double ms = time_ms([&] { brute = knn_bruteforce(pts, a.k); });
        std::printf("brute,%zu,%d,%.3f\n", a.n, a.k, ms);
    }
    if (a.method != "brute") {
        double ms = time_ms([&] { indexed = knn_indexed(pts, a.k); });
        std::printf("indexed,%zu,%d,%.3f\n", a.n, a.k, ms);
    }
    if (a.method == "both" && brute.indices != indexed.indices) {
        std::cerr << "error: brute and indexed results disagree\n";
        return 1;
    }
    return 0;
}

// ---- inspect ----

int cmd_inspect(const std::string& path) {
    PointCloud pc = read_sample(path);
    std::printf("%-16s %s\n", "file", path.c_str());
    std::printf("%-16s %zu\n", "points", pc.size());
    std::printf("%-16s %zu\n", "channels", pc.channels());
    std::printf("%-16s %s\n", "class_label",
                pc.class_label >= 0 ? std::to_string(pc.class_label).c_str() : "absent");
    std::printf("%-16s %s\n", "category",
                pc.category >= 0 ? std::to_string(pc.category).c_str() : "absent");
    std::printf("%-16s %s\n", "part_labels", pc.part_labels.empty() ? "absent" : "present");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point cloud graph-residual network toolkit"};
    app.name("pointgr");
    app.require_subcommand(1);

    GenDataArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic PGRC dataset");
    gen_cmd->add_option("--task", gen.task, "classification | partseg | sceneseg")->required();
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_option("--per-class", gen.per_class, "Samples per class/category");
    gen_cmd->add_option("--points", gen.points, "Points per sample");
    gen_cmd->add_option("--train-fraction", gen.train_fraction, "Share of samples in the train split");
    gen_cmd->add_option("--rooms", gen.rooms, "Rooms (sceneseg)");
    gen_cmd->add_option("--room-points", gen.room_points, "Points per room (sceneseg)");
    gen_cmd->add_option("--block-points", gen.block_points, "Points per block (sceneseg)");

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
    train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest path")->required();
    train_cmd->add_option("--out", tr.out, "Output directory for checkpoint + metrics")->required();
    train_cmd->add_option("--task", tr.task, "Cross-check against the manifest task");
    train_cmd->add_option("--config", tr.config_path, "Training config file (key = value lines)");
    train_cmd->add_option("--epochs", tr.epochs, "Override epochs");
    train_cmd->add_option("--batch", tr.batch, "Override batch size");
    train_cmd->add_option("--lr", tr.lr, "Override learning rate");
    train_cmd->add_option("--seed", tr.seed, "Override seed");
    train_cmd->add_option("--points", tr.points, "Override per-cloud resample count");
    train_cmd->add_option("--k", tr.k, "Override neighbor count");
    train_cmd->add_option("--precision", tr.precision, "f32 | f64");

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint stem (without .cfg/.pgrw)")
        ->required();
    eval_cmd->add_option("--manifest", ev.manifest, "Dataset manifest path")->required();
    eval_cmd->add_option("--split", ev.split, "train | test | auto");
    eval_cmd->add_option("--points", ev.points, "Resample count (0 keeps native)");
    eval_cmd->add_option("--seed", ev.seed, "Resampling seed");
    eval_cmd->add_option("--json", ev.json_path, "JSON output path (default: <checkpoint>.eval.json)");
    eval_cmd->add_option("--precision", ev.precision, "f32 | f64 (default: checkpoint)");

    ParamsArgs pa;
    CLI::App* params_cmd = app.add_subcommand("params", "Print the trainable parameter count");
    params_cmd->add_option("--task", pa.task, "classification | partseg | sceneseg")->required();
    params_cmd->add_option("--classes", pa.classes, "Output classes (or part count)")->required();
    params_cmd->add_option("--channels", pa.channels, "Input channels (default per task)");
    params_cmd->add_option("--categories", pa.categories, "Object categories (partseg)");
    params_cmd->add_option("--k", pa.k, "Neighbor count");

    AblateArgs ab;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "Sweep k or point count on a dataset");
    ablate_cmd->add_option("--manifest", ab.manifest, "Classification manifest")->required();
    ablate_cmd->add_option("--axis", ab.axis, "k | points")->required();
    ablate_cmd->add_option("--values", ab.values, "Comma-separated values")->required();
    ablate_cmd->add_option("--out", ab.out_csv, "Output CSV path")->required();
    ablate_cmd->add_option("--config", ab.config_path, "Training config file");
    ablate_cmd->add_option("--work-dir", ab.work_dir, "Directory for the per-value runs");
    ablate_cmd->add_option("--precision", ab.precision, "f32 | f64");

    KnnBenchArgs kb;
    CLI::App* bench_cmd = app.add_subcommand("knn-bench", "Time the neighbor graph builders");
    bench_cmd->add_option("--n", kb.n, "Point count");
    bench_cmd->add_option("--k", kb.k, "Neighbor count");
    bench_cmd->add_option("--method", kb.method, "brute | indexed | both");
    bench_cmd->add_option("--trials", kb.trials, "Timing repetitions (best is reported)");
    bench_cmd->add_option("--seed", kb.seed, "RNG seed");

    std::string inspect_path;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "Dump a PGRC sample header");
    inspect_cmd->add_option("--sample", inspect_path, "PGRC file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\nRun with --help for usage.\n";
        return 2;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen);
        if (*train_cmd) return cmd_train(tr);
        if (*eval_cmd) return cmd_eval(ev);
        if (*params_cmd) return cmd_params(pa);
        if (*ablate_cmd) return cmd_ablate(ab);
        if (*bench_cmd) return cmd_knn_bench(kb);
        if (*inspect_cmd) return cmd_inspect(inspect_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand given\n";
    return 2;
}
