#pragma once

#include <string>
#include <vector>

#include "pointgr/kdtree.hpp"
#include "pointgr/layers.hpp"

namespace pointgr {

/// Builds one spatial neighbor graph per batch item from the first three
/// channels of x [B, N, C], through the kd-tree.
template <typename T>
std::vector<NeighborGraph> spatial_graphs(const Tensor<T>& x, int k) {
    if (x.rank() != 3 || x.dim(2) < 3) {
        throw ShapeError("spatial_graphs: expected [B, N, C>=3], got " + shape_str(x.shape()));
    }
    const std::size_t b_n = x.dim(0), n = x.dim(1), c = x.dim(2);
    std::vector<NeighborGraph> out;
    out.reserve(b_n);
    std::vector<T> coords(n * 3);
    for (std::size_t b = 0; b < b_n; ++b) {
        const T* src = x.data() + b * n * c;
        for (std::size_t i = 0; i < n; ++i) {
            coords[i * 3 + 0] = src[i * c + 0];
            coords[i * 3 + 1] = src[i * c + 1];
            coords[i * 3 + 2] = src[i * c + 2];
        }
        out.push_back(knn_indexed(coords.data(), n, k));
    }
    return out;
}

/// Neighbor graphs in feature space, brute force over the full feature
/// width, one per batch item.
template <typename T>
std::vector<NeighborGraph> feature_graphs(const Tensor<T>& x, int k) {
    if (x.rank() != 3) throw ShapeError("feature_graphs: expected [B, N, C]");
    const std::size_t b_n = x.dim(0), n = x.dim(1), c = x.dim(2);
    std::vector<NeighborGraph> out;
    out.reserve(b_n);
    for (std::size_t b = 0; b < b_n; ++b) {
        out.push_back(knn_bruteforce(x.data() + b * n * c, n, c, k));
    }
    return out;
}

/// Point embedding block with a residual skip. Edge features [B, N, k, 2C]
/// go through a two-layer bottleneck back to width 2C, are added to the raw
/// edges, max-pooled over the neighbors, and projected to `out` channels.
template <typename T>
struct PreBlock {
    LinearLayer<T> conv1, conv2, project;
    BatchNormLayer<T> bn1, bn2;
    std::size_t in_c = 0, hidden = 0, out_c = 0;
};

template <typename T>
PreBlock<T> register_pre(ParamStore<T>& ps, const std::string& prefix, std::size_t in_c,
                         std::size_t out_c, std::size_t hidden, Rng& rng) {
    PreBlock<T> b;
    b.in_c = in_c;
    b.hidden = hidden;
    b.out_c = out_c;
    b.conv1 = register_linear(ps, prefix + "/conv1", 2 * in_c, hidden, rng);
    b.bn1 = register_batch_norm(ps, prefix + "/bn1", hidden);
    b.conv2 = register_linear(ps, prefix + "/conv2", hidden, 2 * in_c, rng);
    b.bn2 = register_batch_norm(ps, prefix + "/bn2", 2 * in_c);
    b.project = register_linear(ps, prefix + "/project", 2 * in_c, out_c, rng);
    return b;
}

template <typename T>
Var pre_forward(Graph<T>& g, const PreBlock<T>& b, Var x,
                const std::vector<NeighborGraph>& graphs, bool training) {
    Var edges = g.gather_edges(x, graphs);
    Var h = g.relu(batch_norm_forward(g, b.bn1, linear_forward(g, b.conv1, edges), training));
    h = batch_norm_forward(g, b.bn2, linear_forward(g, b.conv2, h), training);
    h = g.relu(g.add(h, edges));
    Var pooled = g.max_axis(h, 2);
    return linear_forward(g, b.project, pooled);
}

/// Feature learning block: one edge convolution on a graph rebuilt in the
/// current feature space, then max over neighbors. No skip.
template <typename T>
struct FlnBlock {
    LinearLayer<T> conv;
    BatchNormLayer<T> bn;
    std::size_t in_c = 0, out_c = 0;
};

template <typename T>
FlnBlock<T> register_fln(ParamStore<T>& ps, const std::string& prefix, std::size_t in_c,
                         std::size_t out_c, Rng& rng) {
    FlnBlock<T> b;
    b.in_c = in_c;
    b.out_c = out_c;
    b.conv = register_linear(ps, prefix + "/conv", 2 * in_c, out_c, rng);
    b.bn = register_batch_norm(ps, prefix + "/bn", out_c);
    return b;
}

/// `graphs` carries the feature-space graphs used for this stage. When empty
/// it is filled from the current features; when pre-populated those graphs
/// are reused, which freezes the (non-differentiable) graph selection for
/// finite-difference checks.
template <typename T>
Var fln_forward(Graph<T>& g, const FlnBlock<T>& b, Var x, int k, bool training,
                std::vector<NeighborGraph>& graphs) {
    if (graphs.empty()) graphs = feature_graphs(g.value(x), k);
    Var edges = g.gather_edges(x, graphs);
    Var h = g.leaky_relu(batch_norm_forward(g, b.bn, linear_forward(g, b.conv, edges), training),
                         T(0.2));
    return g.max_axis(h, 2);
}

} // namespace pointgr
