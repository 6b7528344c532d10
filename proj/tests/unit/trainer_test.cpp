#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "pointgr/models.hpp"
#include "pointgr/synthetic.hpp"
#include "pointgr/trainer.hpp"

using namespace pointgr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("pointgr_trainer_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PointCloud fixed_cloud(std::size_t n, float offset, std::int32_t label, std::int32_t cat) {
    PointCloud pc;
    pc.points = Tensor<float>({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
            pc.points[i * 3 + a] = offset + 0.1f * static_cast<float>(i) + 0.01f * static_cast<float>(a);
        }
    }
    pc.class_label = label;
    pc.category = cat;
    return pc;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 4;
    cfg.lr = 0.05;
    cfg.lr_min = 0.005;
    cfg.seed = 11;
    cfg.k = 4;
    cfg.pre_hidden = 8;
    cfg.fln = {8};
    cfg.aggregate = 16;
    cfg.head = std::vector<std::size_t>{8};
    cfg.dropout = 0.0;
    cfg.precision = "f32";
    return cfg;
}

LoadedDataset tiny_dataset(const fs::path& dir) {
    make_synthetic_classification(dir.string(), 4, 32, 17, 0.75);
    return load_dataset((dir / "manifest.txt").string());
}

} // namespace

TEST_CASE("masked argmax keeps the lowest index on ties and honors the mask") {
    const double row[4] = {0.3, 0.9, 0.9, 0.1};
    CHECK(masked_argmax(row, 4, {}) == 1);
    CHECK(masked_argmax(row, 4, {2, 3}) == 2);
    CHECK(masked_argmax(row, 4, {3}) == 3);
    CHECK(masked_argmax(row, 4, {3, 2}) == 2);
    const double flat[2] = {0.5, 0.5};
    CHECK(masked_argmax(flat, 2, {}) == 0);
}

TEST_CASE("assemble_batch resamples on request and rejects ragged pools") {
    std::vector<PointCloud> pool;
    pool.push_back(fixed_cloud(8, 0.0f, 0, 1));
    pool.push_back(fixed_cloud(12, 2.0f, 1, 0));

    CHECK_THROWS_WITH_AS(assemble_batch<float>(pool, {0, 1}, 0, 5),
                         doctest::Contains("points"), ValidationError);

    Batch<float> batch = assemble_batch<float>(pool, {1, 0}, 6, 5);
    CHECK(batch.x.shape() == Shape{2, 6, 3});
    CHECK(batch.class_labels == std::vector<std::int32_t>{1, 0});
    CHECK(batch.categories == std::vector<std::int32_t>{0, 1});
    CHECK(batch.point_labels.empty());
    for (std::size_t i = 0; i < 6; ++i) CHECK(batch.x[i * 3] >= 2.0f);
    for (std::size_t i = 6; i < 12; ++i) CHECK(batch.x[i * 3] < 2.0f);

    CHECK_THROWS_AS(assemble_batch<float>(pool, {}, 0, 5), ValidationError);
}

TEST_CASE("a four sample classifier drives the training loss below 1e-2") {
    Rng data_rng = make_rng(5);
    Tensor<double> x = random_uniform<double>(data_rng, {4, 12, 3}, -0.2, 0.2);
    for (std::size_t b = 2; b < 4; ++b) {
        for (std::size_t i = 0; i < 12 * 3; ++i) x[b * 36 + i] += 2.0;
    }
    const std::vector<std::int32_t> labels = {0, 0, 1, 1};

    ClassifierSpec spec;
    spec.in_channels = 3;
    spec.num_classes = 2;
    spec.k = 4;
    spec.pre_hidden = 6;
    spec.fln = {6};
    spec.aggregate = 12;
    spec.head = {8};
    spec.dropout = 0.0;

    Graph<double> g;
    ParamStore<double> ps(g);
    Rng init_rng = make_rng(3);
    ClassifierModel<double> model = register_classifier(ps, spec, init_rng);
    SgdMomentum<double> opt(ps, 0.9);
    Rng drop_rng = make_rng(1);

    double best = 1e9;
    for (int step = 0; step < 500; ++step) {
        const std::size_t base = g.mark();
        Var xv = g.leaf(Tensor<double>(x));
        Var logits = classifier_forward(g, model, xv, true, drop_rng);
        Var loss = g.softmax_cross_entropy(logits, labels, 0.0);
        best = std::min(best, g.value(loss)[0]);
        g.backward(loss);
        opt.step(0.05);
        g.zero_grad();
        g.rewind(base);
        if (best < 1e-3) break;
    }
    CHECK(best < 1e-2);
}

TEST_CASE("identical seeds reproduce the metrics file byte for byte") {
    TempDir data, run_a, run_b;
    LoadedDataset ds = tiny_dataset(data.path);
    TrainConfig cfg = tiny_config();

    TrainOutcome a = run_training<float>(ds, cfg, (run_a.path / "out").string());
    TrainOutcome b = run_training<float>(ds, cfg, (run_b.path / "out").string());

    const std::string csv_a = slurp(a.csv_path);
    CHECK(csv_a == slurp(b.csv_path));
    CHECK(csv_a.rfind(std::string(kMetricsCsvHeader) + "\n", 0) == 0);
    CHECK(a.rows.size() == 2 * a.epochs_run);
    CHECK(a.best_eval_metric == b.best_eval_metric);
}

TEST_CASE("zero epochs still checkpoints the initial weights") {
    TempDir data, run;
    LoadedDataset ds = tiny_dataset(data.path);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;

    TrainOutcome out = run_training<float>(ds, cfg, (run.path / "out").string());
    CHECK(out.rows.empty());
    CHECK(slurp(out.csv_path) == std::string(kMetricsCsvHeader) + "\n");
    CHECK(fs::exists(out.checkpoint_stem + ".cfg"));
    CHECK(fs::exists(out.checkpoint_stem + ".pgrw"));
}

TEST_CASE("standalone evaluation reproduces the best checkpointed epoch") {
    TempDir data, run;
    LoadedDataset ds = tiny_dataset(data.path);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 3;

    TrainOutcome out = run_training<float>(ds, cfg, (run.path / "out").string());
    REQUIRE(out.epochs_run == 3);

    EvalOutput ev = evaluate_checkpoint<float>(out.checkpoint_stem, ds, "test", 0, 0);
    CHECK(ev.split_used == "test");
    CHECK(ev.samples == ds.test.size());
    CHECK(ev.report.overall_accuracy == doctest::Approx(out.best_eval_row.overall_acc).epsilon(1e-12));
    CHECK(ev.report.mean_class_accuracy == doctest::Approx(out.best_eval_row.mean_acc).epsilon(1e-12));
    CHECK(ev.mean_iou == doctest::Approx(out.best_eval_row.mean_iou).epsilon(1e-12));
    CHECK(ev.mean_loss == doctest::Approx(out.best_eval_row.loss).epsilon(1e-6));

    CHECK_THROWS_WITH_AS(evaluate_checkpoint<float>(out.checkpoint_stem, ds, "dev", 0, 0),
                         doctest::Contains("split"), ValidationError);
}

TEST_CASE("a train accuracy target stops the loop at the first qualifying epoch") {
    TempDir data, run;
    LoadedDataset ds = tiny_dataset(data.path);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 50;
    cfg.stop_train_acc = 0.0;

    TrainOutcome out = run_training<float>(ds, cfg, (run.path / "out").string());
    CHECK(out.epochs_run == 1);
    CHECK(out.rows.size() == 2);
}

TEST_CASE("ablation sweeps emit one row per value") {
    TempDir data, work;
    LoadedDataset ds = tiny_dataset(data.path);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 1;

    std::vector<AblateRow> rows =
        run_ablation<float>(ds, cfg, "k", {2, 3}, (work.path / "runs").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].axis == "k");
    CHECK(rows[0].value == 2);
    CHECK(rows[1].value == 3);
    for (const AblateRow& r : rows) {
        CHECK(r.overall_acc >= 0.0);
        CHECK(r.overall_acc <= 1.0);
    }

    const std::string csv = ablate_csv_text(rows);
    CHECK(csv.rfind("axis,value,overall_acc,mean_acc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    CHECK_THROWS_AS(run_ablation<float>(ds, cfg, "width", {1}, work.path.string()),
                    ValidationError);
    CHECK_THROWS_AS(run_ablation<float>(ds, cfg, "k", {}, work.path.string()), ValidationError);

    LoadedDataset wrong;
    wrong.manifest.task = Task::partseg;
    CHECK_THROWS_AS(run_ablation<float>(wrong, cfg, "k", {2}, work.path.string()),
                    ValidationError);
}

TEST_CASE("metrics rows format with six decimal places") {
    EpochRow r;
    r.epoch = 2;
    r.split = "train";
    r.loss = 0.5;
    r.overall_acc = 1.0;
    r.mean_acc = 0.25;
    r.mean_iou = 1.0 / 3.0;
    CHECK(format_metrics_row(r) == "2,train,0.500000,1.000000,0.250000,0.333333");
    CHECK(std::string(kMetricsCsvHeader) == "epoch,split,loss,overall_acc,mean_acc,mean_iou");
}
