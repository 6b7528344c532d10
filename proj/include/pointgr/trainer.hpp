#pragma once

#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pointgr/checkpoint.hpp"
#include "pointgr/metrics.hpp"
#include "pointgr/train_config.hpp"

namespace pointgr {

inline constexpr const char* kMetricsCsvHeader = "epoch,split,loss,overall_acc,mean_acc,mean_iou";

struct EpochRow {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double overall_acc = 0.0;
    double mean_acc = 0.0;
    double mean_iou = 0.0;
};

inline std::string format_metrics_row(const EpochRow& r) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f,%.6f,%.6f", r.epoch, r.split.c_str(), r.loss,
                  r.overall_acc, r.mean_acc, r.mean_iou);
    return buf;
}

inline std::string metrics_csv_text(const std::vector<EpochRow>& rows) {
    std::string out = std::string(kMetricsCsvHeader) + "\n";
    for (const EpochRow& r : rows) out += format_metrics_row(r) + "\n";
    return out;
}

struct TrainOutcome {
    std::vector<EpochRow> rows;
    std::string checkpoint_stem;
    std::string csv_path;
    double best_eval_metric = -1.0;
    EpochRow best_eval_row;
    std::size_t epochs_run = 0;
};

// ---- model bundle over the three tasks ----

template <typename T>
struct ModelBundle {
    Task task = Task::classification;
    ClassifierModel<T> cls;
    PartSegModel<T> part;
    SceneSegModel<T> scene;
};

template <typename T>
ModelBundle<T> register_bundle(ParamStore<T>& ps, const ModelConfig& mc, Rng& rng) {
    ModelBundle<T> mb;
    mb.task = mc.task;
    switch (mc.task) {
        case Task::classification: mb.cls = register_classifier(ps, to_classifier_spec(mc), rng); break;
        case Task::partseg: mb.part = register_part_seg(ps, to_part_seg_spec(mc), rng); break;
        case Task::sceneseg: mb.scene = register_scene_seg(ps, to_scene_seg_spec(mc), rng); break;
    }
    return mb;
}

template <typename T>
Var bundle_forward(Graph<T>& g, const ModelBundle<T>& mb, Var x,
                   const std::vector<std::int32_t>& categories, bool training, Rng& rng,
                   GraphPlan* plan = nullptr) {
    switch (mb.task) {
        case Task::classification: return classifier_forward(g, mb.cls, x, training, rng, plan);
        case Task::partseg: return part_seg_forward(g, mb.part, x, categories, training, rng, plan);
        case Task::sceneseg: return scene_seg_forward(g, mb.scene, x, training, rng, plan);
    }
    throw ValidationError("bundle_forward: bad task");
}

// ---- batches ----

template <typename T>
struct Batch {
    Tensor<T> x;  // [B, N, C]
    std::vector<std::int32_t> class_labels;
    std::vector<std::int32_t> point_labels;  // flattened [B * N]
    std::vector<std::int32_t> categories;
};

/// Picks the clouds in `ids` from the pool, resampling each to
/// `points` points when points > 0 (seeded per cloud from stream_seed).
/// With points == 0 the native sizes must all agree.
template <typename T>
Batch<T> assemble_batch(const std::vector<PointCloud>& pool, const std::vector<std::size_t>& ids,
                        std::size_t points, std::uint64_t stream_seed) {
    if (ids.empty()) throw ValidationError("assemble_batch: empty batch");
    Batch<T> batch;
    std::vector<PointCloud> resampled;
    resampled.reserve(ids.size());  // rows holds pointers into it
    std::vector<const PointCloud*> rows;
    rows.reserve(ids.size());
    for (std::size_t id : ids) {
        const PointCloud& pc = pool.at(id);
        if (points > 0 && points != pc.size()) {
            resampled.push_back(uniform_sample(pc, points, derive_seed(stream_seed, id)));
            rows.push_back(&resampled.back());
        } else {
            rows.push_back(&pc);
        }
    }
    const std::size_t n = rows[0]->size(), c = rows[0]->channels();
    for (const PointCloud* pc : rows) {
        if (pc->size() != n || pc->channels() != c) {
            throw ValidationError(
                "assemble_batch: clouds differ in size; set `points` to resample");
        }
    }
    batch.x = Tensor<T>({ids.size(), n, c});
    for (std::size_t b = 0; b < rows.size(); ++b) {
        const PointCloud& pc = *rows[b];
        for (std::size_t i = 0; i < n * c; ++i) {
            batch.x[b * n * c + i] = static_cast<T>(pc.points[i]);
        }
        batch.class_labels.push_back(pc.class_label);
        batch.categories.push_back(pc.category);
        for (std::int32_t label : pc.part_labels) batch.point_labels.push_back(label);
    }
    return batch;
}

/// Highest-scoring class among `parts` (all classes when empty); ties keep
/// the lowest index.
template <typename T>
std::int32_t masked_argmax(const T* row, std::size_t m, const std::vector<std::int32_t>& parts) {
    if (parts.empty()) {
        std::int32_t best = 0;
        for (std::size_t j = 1; j < m; ++j) {
            if (row[j] > row[best]) best = static_cast<std::int32_t>(j);
        }
        return best;
    }
    std::int32_t best = parts[0];
    for (std::int32_t p : parts) {
        if (row[p] > row[best]) best = p;
    }
    return best;
}

// ---- epoch pass ----

struct PassResult {
    double loss_sum = 0.0;  // summed over label rows
    std::size_t label_rows = 0;
    std::vector<std::int32_t> preds, trues;               // flattened over the pass
    std::vector<std::vector<std::int32_t>> shape_preds;   // part segmentation only
    std::vector<std::vector<std::int32_t>> shape_trues;
    std::vector<std::int32_t> shape_cats;
};

template <typename T>
struct TrainContext {
    Graph<T>* g = nullptr;
    ModelBundle<T>* model = nullptr;
    const ResolvedTrainConfig* cfg = nullptr;
    const std::vector<std::vector<std::int32_t>>* catalog = nullptr;
    Rng* dropout_rng = nullptr;
    std::size_t num_classes = 0;
};

/// One pass over `pool` in `order`. With an optimizer this is a training
/// pass (dropout active, batch norm in batch mode, one step per batch);
/// without one it is a pure evaluation. Predictions are gathered either way;
/// training-pass metrics therefore reflect the evolving weights.
template <typename T>
PassResult run_pass(TrainContext<T>& ctx, const std::vector<PointCloud>& pool,
                    const std::vector<std::size_t>& order, SgdMomentum<T>* opt, T lr,
                    std::uint64_t resample_stream) {
    Graph<T>& g = *ctx.g;
    const bool training = opt != nullptr;
    const Task task = ctx.model->task;
    const std::size_t batch_size = ctx.cfg->raw.batch;
    const std::size_t m = ctx.num_classes;

    PassResult res;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, order.size());
        std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        Batch<T> batch = assemble_batch<T>(pool, ids, ctx.cfg->raw.points, resample_stream);
        const std::size_t b_n = batch.x.dim(0), n = batch.x.dim(1);

        const std::vector<std::int32_t>& labels =
            task == Task::classification ? batch.class_labels : batch.point_labels;

        const std::size_t base = g.mark();
        Var x = g.leaf(std::move(batch.x));
        Var logits = bundle_forward(g, *ctx.model, x, batch.categories, training, *ctx.dropout_rng);
        Var loss = g.softmax_cross_entropy(logits, labels,
                                           static_cast<T>(ctx.cfg->raw.label_smoothing));
        res.loss_sum += static_cast<double>(g.value(loss)[0]) * static_cast<double>(labels.size());
        res.label_rows += labels.size();

        if (training) {
            g.backward(loss);
            opt->step(lr);
        }

        const Tensor<T>& lv = g.value(logits);
        if (task == Task::classification) {
            for (std::size_t b = 0; b < b_n; ++b) {
                res.preds.push_back(masked_argmax(lv.data() + b * m, m, {}));
                res.trues.push_back(batch.class_labels[b]);
            }
        } else {
            for (std::size_t b = 0; b < b_n; ++b) {
                const std::vector<std::int32_t>* parts = nullptr;
                static const std::vector<std::int32_t> kAll;
                if (task == Task::partseg) {
                    parts = &ctx.catalog->at(static_cast<std::size_t>(batch.categories[b]));
                } else {
                    parts = &kAll;
                }
                std::vector<std::int32_t> sp(n), st(n);
                for (std::size_t i = 0; i < n; ++i) {
                    sp[i] = masked_argmax(lv.data() + (b * n + i) * m, m, *parts);
                    st[i] = batch.point_labels[b * n + i];
                }
                res.preds.insert(res.preds.end(), sp.begin(), sp.end());
                res.trues.insert(res.trues.end(), st.begin(), st.end());
                if (task == Task::partseg) {
                    res.shape_preds.push_back(std::move(sp));
                    res.shape_trues.push_back(std::move(st));
                    res.shape_cats.push_back(batch.categories[b]);
                }
            }
        }

        g.zero_grad();
        g.rewind(base);
    }
    return res;
}

inline EpochRow summarize_pass(const PassResult& res, std::size_t epoch, const std::string& split,
                               Task task, std::size_t num_classes,
                               const std::vector<std::vector<std::int32_t>>& catalog) {
    EpochRow row;
    row.epoch = epoch;
    row.split = split;
    row.loss = res.loss_sum / static_cast<double>(res.label_rows);
    MetricReport rep = compute_metrics(res.preds, res.trues, num_classes);
    row.overall_acc = rep.overall_accuracy;
    row.mean_acc = rep.mean_class_accuracy;
    row.mean_iou = task == Task::partseg
                       ? partseg_mean_iou(res.shape_preds, res.shape_trues, res.shape_cats, catalog)
                       : rep.mean_iou;
    return row;
}

// ---- training loop ----

inline ModelConfig make_model_config(const ResolvedTrainConfig& r, const DatasetManifest& man,
                                     std::size_t categories) {
    ModelConfig mc;
    mc.task = man.task;
    mc.classes = man.num_classes;
    mc.channels = man.channels;
    mc.categories = categories;
    mc.k = r.raw.k;
    mc.pre_hidden = r.raw.pre_hidden;
    mc.fln = r.raw.fln;
    mc.aggregate = r.raw.aggregate;
    mc.head = r.head;
    mc.label_dim = r.raw.label_dim;
    mc.dropout = r.raw.dropout;
    mc.precision = r.precision;
    return mc;
}

/// Full deterministic training run. Writes metrics.csv (one train row and
/// one test row per epoch; the test rows fall back to the train split when
/// the dataset has no test samples) plus checkpoint.{cfg,pgrw} holding the
/// weights with the best eval metric (overall accuracy for classification,
/// mean IoU for segmentation). epochs = 0 checkpoints the initial weights
/// and leaves only the CSV header.
template <typename T>
TrainOutcome run_training(const LoadedDataset& ds, const TrainConfig& cfg,
                          const std::string& out_dir) {
    const Task task = ds.manifest.task;
    const ResolvedTrainConfig rc = resolve_config(cfg, task);
    if (ds.train.empty()) throw ValidationError("run_training: dataset has no train samples");

    std::vector<std::vector<std::int32_t>> catalog;
    if (task == Task::partseg) {
        catalog = part_catalog(ds);
        if (catalog.empty()) throw ValidationError("run_training: no categories in dataset");
    }

    Rng init_rng = make_rng(derive_seed(cfg.seed, 7));
    Rng dropout_rng = make_rng(derive_seed(cfg.seed, 42));

    Graph<T> g;
    ParamStore<T> ps(g);
    ModelConfig mc = make_model_config(rc, ds.manifest, catalog.size());
    ModelBundle<T> model = register_bundle(ps, mc, init_rng);
    SgdMomentum<T> opt(ps, static_cast<T>(cfg.momentum));

    std::filesystem::create_directories(out_dir);
    TrainOutcome out;
    out.checkpoint_stem = (std::filesystem::path(out_dir) / "checkpoint").string();
    out.csv_path = (std::filesystem::path(out_dir) / "metrics.csv").string();

    TrainContext<T> ctx;
    ctx.g = &g;
    ctx.model = &model;
    ctx.cfg = &rc;
    ctx.catalog = &catalog;
    ctx.dropout_rng = &dropout_rng;
    ctx.num_classes = ds.manifest.num_classes;

    if (cfg.epochs == 0) {
        save_checkpoint(out.checkpoint_stem, mc, ps, &opt);
        write_file_bytes(out.csv_path, metrics_csv_text(out.rows));
        return out;
    }

    const std::vector<PointCloud>& eval_pool = ds.test.empty() ? ds.train : ds.test;
    std::vector<std::size_t> eval_order(eval_pool.size());
    std::iota(eval_order.begin(), eval_order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const T lr = cosine_lr(epoch, cfg.epochs, static_cast<T>(rc.lr), static_cast<T>(rc.lr_min));

        std::vector<std::size_t> order(ds.train.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 3000000 + epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        PassResult train_res = run_pass(ctx, ds.train, order, &opt, lr,
                                        derive_seed(cfg.seed, 1000000 + epoch));
        EpochRow train_row = summarize_pass(train_res, epoch + 1, "train", task,
                                            ds.manifest.num_classes, catalog);

        PassResult eval_res = run_pass(ctx, eval_pool, eval_order, static_cast<SgdMomentum<T>*>(nullptr),
                                       T(0), derive_seed(cfg.seed, 2000000 + epoch));
        EpochRow eval_row = summarize_pass(eval_res, epoch + 1, "test", task,
                                           ds.manifest.num_classes, catalog);
        out.rows.push_back(train_row);
        out.rows.push_back(eval_row);
        out.epochs_run = epoch + 1;

        const double eval_metric =
            task == Task::classification ? eval_row.overall_acc : eval_row.mean_iou;
        if (eval_metric > out.best_eval_metric) {
            out.best_eval_metric = eval_metric;
            out.best_eval_row = eval_row;
            save_checkpoint(out.checkpoint_stem, mc, ps, &opt);
        }

        const double train_target_metric =
            task == Task::classification ? train_row.overall_acc : train_row.mean_iou;
        if (task == Task::classification && cfg.stop_train_acc &&
            train_target_metric >= *cfg.stop_train_acc) {
            break;
        }
        if (task != Task::classification && cfg.stop_train_miou &&
            train_target_metric >= *cfg.stop_train_miou) {
            break;
        }
    }
    write_file_bytes(out.csv_path, metrics_csv_text(out.rows));
    return out;
}

// ---- standalone evaluation ----

struct EvalOutput {
    MetricReport report;
    double mean_loss = 0.0;
    double mean_iou = 0.0;  // task convention (shape-averaged for part seg)
    std::string split_used;
    std::size_t samples = 0;
};

template <typename T>
EvalOutput evaluate_checkpoint(const std::string& stem, const LoadedDataset& ds,
                               const std::string& split, std::size_t points,
                               std::uint64_t seed) {
    CheckpointData<T> ckpt = load_checkpoint<T>(stem);
    if (ckpt.config.task != ds.manifest.task) {
        throw ValidationError("evaluate_checkpoint: checkpoint task " +
                              task_name(ckpt.config.task) + " vs dataset task " +
                              task_name(ds.manifest.task));
    }
    if (ckpt.config.classes != ds.manifest.num_classes) {
        throw ValidationError("evaluate_checkpoint: class count mismatch");
    }
    if (ckpt.config.channels != ds.manifest.channels) {
        throw ValidationError("evaluate_checkpoint: channel count mismatch");
    }

    const std::vector<PointCloud>* pool = nullptr;
    std::string split_used = split;
    if (split == "train") pool = &ds.train;
    else if (split == "test") pool = &ds.test;
    else if (split == "auto") {
        pool = ds.test.empty() ? &ds.train : &ds.test;
        split_used = ds.test.empty() ? "train" : "test";
    } else {
        throw ValidationError("evaluate_checkpoint: split must be train, test, or auto");
    }
    if (pool->empty()) throw ValidationError("evaluate_checkpoint: split '" + split_used + "' is empty");

    Rng init_rng = make_rng(1);
    Rng dropout_rng = make_rng(2);
    Graph<T> g;
    ParamStore<T> ps(g);
    ModelBundle<T> model = register_bundle(ps, ckpt.config, init_rng);
    ps.load_values(ckpt.weights);

    TrainConfig cfg;
    cfg.points = points;
    cfg.k = ckpt.config.k;
    const ResolvedTrainConfig rc = resolve_config(cfg, ds.manifest.task);

    std::vector<std::vector<std::int32_t>> catalog;
    if (ds.manifest.task == Task::partseg) catalog = part_catalog(ds);

    TrainContext<T> ctx;
    ctx.g = &g;
    ctx.model = &model;
    ctx.cfg = &rc;
    ctx.catalog = &catalog;
    ctx.dropout_rng = &dropout_rng;
    ctx.num_classes = ds.manifest.num_classes;

    std::vector<std::size_t> order(pool->size());
    std::iota(order.begin(), order.end(), 0);
    PassResult res = run_pass(ctx, *pool, order, static_cast<SgdMomentum<T>*>(nullptr), T(0),
                              derive_seed(seed, 9000000));

    EvalOutput out;
    out.report = compute_metrics(res.preds, res.trues, ds.manifest.num_classes);
    out.mean_loss = res.loss_sum / static_cast<double>(res.label_rows);
    out.mean_iou = ds.manifest.task == Task::partseg
                       ? partseg_mean_iou(res.shape_preds, res.shape_trues, res.shape_cats, catalog)
                       : out.report.mean_iou;
    out.split_used = split_used;
    out.samples = pool->size();
    return out;
}

// ---- ablation ----

struct AblateRow {
    std::string axis;
    std::size_t value = 0;
    double overall_acc = 0.0;
    double mean_acc = 0.0;
};

inline std::string ablate_csv_text(const std::vector<AblateRow>& rows) {
    std::string out = "axis,value,overall_acc,mean_acc\n";
    for (const AblateRow& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f\n", r.axis.c_str(), r.value,
                      r.overall_acc, r.mean_acc);
        out += buf;
    }
    return out;
}

/// Trains one classifier per value of the swept axis (k or points) and
/// reports the best eval-split accuracy each run reached.
template <typename T>
std::vector<AblateRow> run_ablation(const LoadedDataset& ds, const TrainConfig& base,
                                    const std::string& axis,
                                    const std::vector<std::size_t>& values,
                                    const std::string& work_dir) {
    if (ds.manifest.task != Task::classification) {
        throw ValidationError("run_ablation: classification datasets only");
    }
    if (axis != "k" && axis != "points") {
        throw ValidationError("run_ablation: axis must be 'k' or 'points'");
    }
    if (values.empty()) throw ValidationError("run_ablation: no values given");

    std::vector<AblateRow> rows;
    for (std::size_t value : values) {
        TrainConfig cfg = base;
        if (axis == "k") cfg.k = static_cast<int>(value);
        else cfg.points = value;
        const std::string run_dir =
            (std::filesystem::path(work_dir) / (axis + "_" + std::to_string(value))).string();
        TrainOutcome outcome = run_training<T>(ds, cfg, run_dir);
        AblateRow row;
        row.axis = axis;
        row.value = value;
        row.overall_acc = outcome.best_eval_row.overall_acc;
        row.mean_acc = outcome.best_eval_row.mean_acc;
        rows.push_back(row);
    }
    return rows;
}

} // namespace pointgr
