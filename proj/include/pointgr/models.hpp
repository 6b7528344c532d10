#pragma once

#include <string>
#include <vector>

#include "pointgr/blocks.hpp"

namespace pointgr {

/// Captured feature-space graphs, one inner vector per feature learning
/// stage. Passing the same plan to a second forward pass reuses the graphs
/// instead of recomputing them from the (changed) features; gradient checks
/// rely on that to keep the non-differentiable graph selection fixed.
struct GraphPlan {
    std::vector<std::vector<NeighborGraph>> fln_stages;
};

/// Shared backbone: point embedding on the spatial graph, a chain of
/// feature learning stages on dynamic feature-space graphs, then a learned
/// aggregation of every stage's output.
template <typename T>
struct Trunk {
    PreBlock<T> pre;
    std::vector<FlnBlock<T>> fln;
    LinearLayer<T> agg;
    BatchNormLayer<T> agg_bn;
    int k = 20;
    std::size_t in_c = 0;
    std::size_t concat_width = 0;
    std::size_t agg_width = 0;
};

template <typename T>
Trunk<T> register_trunk(ParamStore<T>& ps, std::size_t in_c, std::size_t pre_hidden,
                        std::size_t pre_out, const std::vector<std::size_t>& fln_widths,
                        std::size_t agg_width, int k, Rng& rng) {
    Trunk<T> t;
    t.k = k;
    t.in_c = in_c;
    t.agg_width = agg_width;
    if (pre_out == 0) pre_out = 2 * in_c;
    t.pre = register_pre(ps, "pre", in_c, pre_out, pre_hidden, rng);
    std::size_t width = pre_out;
    t.concat_width = pre_out;
    for (std::size_t s = 0; s < fln_widths.size(); ++s) {
        t.fln.push_back(register_fln(ps, "fln" + std::to_string(s + 1), width, fln_widths[s], rng));
        width = fln_widths[s];
        t.concat_width += width;
    }
    t.agg = register_linear(ps, "aggregate", t.concat_width, agg_width, rng);
    t.agg_bn = register_batch_norm(ps, "aggregate/bn", agg_width);
    return t;
}

template <typename T>
struct TrunkOut {
    Var point_concat;  // [B, N, concat_width]
    Var aggregated;    // [B, N, agg_width]
};

template <typename T>
TrunkOut<T> trunk_forward(Graph<T>& g, const Trunk<T>& t, Var x, bool training, GraphPlan* plan) {
    std::vector<NeighborGraph> spatial = spatial_graphs(g.value(x), t.k);
    Var h = pre_forward(g, t.pre, x, spatial, training);
    Var cat = h;
    std::vector<NeighborGraph> scratch;
    for (std::size_t s = 0; s < t.fln.size(); ++s) {
        std::vector<NeighborGraph>* graphs = &scratch;
        if (plan) {
            if (plan->fln_stages.size() <= s) plan->fln_stages.emplace_back();
            graphs = &plan->fln_stages[s];
        } else {
            scratch.clear();
        }
        h = fln_forward(g, t.fln[s], h, t.k, training, *graphs);
        cat = g.concat(cat, h, 2);
    }
    TrunkOut<T> out;
    out.point_concat = cat;
    out.aggregated = g.leaky_relu(
        batch_norm_forward(g, t.agg_bn, linear_forward(g, t.agg, cat), training), T(0.2));
    return out;
}

template <typename T>
struct HeadStage {
    LinearLayer<T> lin;
    BatchNormLayer<T> bn;
};

template <typename T>
std::vector<HeadStage<T>> register_head(ParamStore<T>& ps, const std::string& prefix,
                                        std::size_t in, const std::vector<std::size_t>& widths,
                                        Rng& rng) {
    std::vector<HeadStage<T>> head;
    for (std::size_t s = 0; s < widths.size(); ++s) {
        HeadStage<T> st;
        std::string name = prefix + std::to_string(s + 1);
        st.lin = register_linear(ps, name, in, widths[s], rng);
        st.bn = register_batch_norm(ps, name + "/bn", widths[s]);
        head.push_back(st);
        in = widths[s];
    }
    return head;
}

template <typename T>
Var head_forward(Graph<T>& g, const std::vector<HeadStage<T>>& head, Var x, T dropout,
                 bool training, Rng& rng) {
    for (const HeadStage<T>& st : head) {
        x = g.leaky_relu(batch_norm_forward(g, st.bn, linear_forward(g, st.lin, x), training),
                         T(0.2));
        x = g.dropout(x, dropout, rng, training);
    }
    return x;
}

// ---- classification ----

struct ClassifierSpec {
    std::size_t in_channels = 3;
    std::size_t num_classes = 40;
    int k = 20;
    std::size_t pre_hidden = 64;
    std::size_t pre_out = 0;  // 0 picks 2 * in_channels
    std::vector<std::size_t> fln = {64, 128, 256};
    std::size_t aggregate = 1024;
    std::vector<std::size_t> head = {512, 256};
    double dropout = 0.5;
};

template <typename T>
struct ClassifierModel {
    ClassifierSpec spec;
    Trunk<T> trunk;
    std::vector<HeadStage<T>> head;
    LinearLayer<T> logits;
};

template <typename T>
ClassifierModel<T> register_classifier(ParamStore<T>& ps, const ClassifierSpec& spec, Rng& rng) {
    ClassifierModel<T> m;
    m.spec = spec;
    m.trunk = register_trunk(ps, spec.in_channels, spec.pre_hidden, spec.pre_out, spec.fln,
                             spec.aggregate, spec.k, rng);
    // global descriptor concatenates max and mean pooling
    m.head = register_head(ps, "head", 2 * spec.aggregate, spec.head, rng);
    std::size_t last = spec.head.empty() ? 2 * spec.aggregate : spec.head.back();
    m.logits = register_linear(ps, "logits", last, spec.num_classes, rng, true);
    return m;
}

template <typename T>
Var classifier_forward(Graph<T>& g, const ClassifierModel<T>& m, Var x, bool training, Rng& rng,
                       GraphPlan* plan = nullptr) {
    TrunkOut<T> t = trunk_forward(g, m.trunk, x, training, plan);
    Var global = g.concat(g.max_axis(t.aggregated, 1), g.mean_axis(t.aggregated, 1), 1);
    Var h = head_forward(g, m.head, global, static_cast<T>(m.spec.dropout), training, rng);
    return linear_forward(g, m.logits, h);
}

// ---- part segmentation ----

struct PartSegSpec {
    std::size_t in_channels = 3;
    std::size_t num_parts = 50;
    std::size_t num_categories = 16;
    int k = 40;
    std::size_t pre_hidden = 64;
    std::size_t pre_out = 0;
    std::vector<std::size_t> fln = {64, 128, 256};
    std::size_t aggregate = 1024;
    std::size_t label_dim = 64;
    std::vector<std::size_t> head = {256, 128};
    double dropout = 0.5;
};

template <typename T>
struct PartSegModel {
    PartSegSpec spec;
    Trunk<T> trunk;
    LinearLayer<T> label_enc;
    std::vector<HeadStage<T>> head;
    LinearLayer<T> logits;
};

template <typename T>
PartSegModel<T> register_part_seg(ParamStore<T>& ps, const PartSegSpec& spec, Rng& rng) {
    PartSegModel<T> m;
    m.spec = spec;
    m.trunk = register_trunk(ps, spec.in_channels, spec.pre_hidden, spec.pre_out, spec.fln,
                             spec.aggregate, spec.k, rng);
    m.label_enc = register_linear(ps, "label_encoder", spec.num_categories, spec.label_dim, rng);
    std::size_t in = spec.aggregate + spec.label_dim + m.trunk.concat_width;
    m.head = register_head(ps, "head", in, spec.head, rng);
    std::size_t last = spec.head.empty() ? in : spec.head.back();
    m.logits = register_linear(ps, "logits", last, spec.num_parts, rng, true);
    return m;
}

/// x [B, N, C] plus one category id per cloud; logits come back per point as
/// [B, N, num_parts].
template <typename T>
Var part_seg_forward(Graph<T>& g, const PartSegModel<T>& m, Var x,
                     const std::vector<std::int32_t>& categories, bool training, Rng& rng,
                     GraphPlan* plan = nullptr) {
    const Tensor<T>& vx = g.value(x);
    const std::size_t b_n = vx.dim(0), n = vx.dim(1);
    if (categories.size() != b_n) throw ShapeError("part_seg_forward: one category per cloud");

    TrunkOut<T> t = trunk_forward(g, m.trunk, x, training, plan);
    Var global = g.broadcast_points(g.max_axis(t.aggregated, 1), n);

    Tensor<T> onehot({b_n, m.spec.num_categories});
    for (std::size_t b = 0; b < b_n; ++b) {
        std::int32_t c = categories[b];
        if (c < 0 || static_cast<std::size_t>(c) >= m.spec.num_categories) {
            throw ValidationError("part_seg_forward: category id out of range");
        }
        onehot[b * m.spec.num_categories + static_cast<std::size_t>(c)] = T(1);
    }
    Var label = g.relu(linear_forward(g, m.label_enc, g.leaf(std::move(onehot))));
    Var fused = g.concat(g.concat(global, g.broadcast_points(label, n), 2), t.point_concat, 2);
    Var h = head_forward(g, m.head, fused, static_cast<T>(m.spec.dropout), training, rng);
    return linear_forward(g, m.logits, h);
}

// ---- scene segmentation ----

struct SceneSegSpec {
    std::size_t in_channels = 9;
    std::size_t num_classes = 13;
    int k = 20;
    std::size_t pre_hidden = 64;
    std::size_t pre_out = 0;
    std::vector<std::size_t> fln = {64, 128, 256};
    std::size_t aggregate = 1024;
    std::vector<std::size_t> head = {256, 128};
    double dropout = 0.5;
};

template <typename T>
struct SceneSegModel {
    SceneSegSpec spec;
    Trunk<T> trunk;
    std::vector<HeadStage<T>> head;
    LinearLayer<T> logits;
};

template <typename T>
SceneSegModel<T> register_scene_seg(ParamStore<T>& ps, const SceneSegSpec& spec, Rng& rng) {
    SceneSegModel<T> m;
    m.spec = spec;
    m.trunk = register_trunk(ps, spec.in_channels, spec.pre_hidden, spec.pre_out, spec.fln,
                             spec.aggregate, spec.k, rng);
    std::size_t in = spec.aggregate + m.trunk.concat_width;
    m.head = register_head(ps, "head", in, spec.head, rng);
    std::size_t last = spec.head.empty() ? in : spec.head.back();
    m.logits = register_linear(ps, "logits", last, spec.num_classes, rng, true);
    return m;
}

template <typename T>
Var scene_seg_forward(Graph<T>& g, const SceneSegModel<T>& m, Var x, bool training, Rng& rng,
                      GraphPlan* plan = nullptr) {
    const std::size_t n = g.value(x).dim(1);
    TrunkOut<T> t = trunk_forward(g, m.trunk, x, training, plan);
    Var global = g.broadcast_points(g.max_axis(t.aggregated, 1), n);
    Var fused = g.concat(global, t.point_concat, 2);
    Var h = head_forward(g, m.head, fused, static_cast<T>(m.spec.dropout), training, rng);
    return linear_forward(g, m.logits, h);
}

} // namespace pointgr
