#pragma once

#include <cstddef>

#include "pointgr/knn.hpp"

namespace pointgr {

/// Edge features for one cloud: out[i, j, :] = [x_i, x_i - x_{g(i,j)}] with
/// shape [N, k, 2C]. Row j = 0 pairs each point with itself, so its second
/// half is exactly zero.
template <typename T>
Tensor<T> build_edge_features(const Tensor<T>& x, const NeighborGraph& g) {
    if (x.rank() != 2) {
        throw ShapeError("build_edge_features: expected [N, C], got " + shape_str(x.shape()));
    }
    const std::size_t n = x.dim(0), c = x.dim(1);
    if (g.n != n) {
        throw ShapeError("build_edge_features: graph covers " + std::to_string(g.n) +
                         " points, features cover " + std::to_string(n));
    }
    const std::size_t k = static_cast<std::size_t>(g.k);
    for (std::int32_t idx : g.indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
            throw ValidationError("build_edge_features: neighbor index " + std::to_string(idx) +
                                  " outside [0, " + std::to_string(n) + ")");
        }
    }
    Tensor<T> out({n, k, 2 * c});
    const T* src = x.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const T* xi = src + i * c;
        for (std::size_t j = 0; j < k; ++j) {
            const T* xj = src + static_cast<std::size_t>(g.at(i, j)) * c;
            T* row = dst + (i * k + j) * 2 * c;
            for (std::size_t d = 0; d < c; ++d) {
                row[d] = xi[d];
                row[c + d] = xi[d] - xj[d];
            }
        }
    }
    return out;
}

/// Graph construction in feature space: kNN over the rows of x (any width),
/// then edge assembly. Used by feature-learning stages, where the graph is
/// recomputed from the current features rather than the input coordinates.
template <typename T>
std::pair<Tensor<T>, NeighborGraph> multiscale_graph(const Tensor<T>& x, int k) {
    NeighborGraph g = knn_bruteforce(x, k);
    return {build_edge_features(x, g), g};
}

} // namespace pointgr
