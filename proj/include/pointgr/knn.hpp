#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pointgr/errors.hpp"
#include "pointgr/tensor.hpp"

namespace pointgr {

/// k-nearest-neighbor table over one point set. Row i lists the neighbor
/// indices of point i ordered by ascending squared Euclidean distance, self
/// first (distance 0), distance ties broken by ascending point index.
struct NeighborGraph {
    std::vector<std::int32_t> indices; // n * k, row-major
    std::size_t n = 0;
    int k = 0;

    std::int32_t at(std::size_t i, int j) const {
        return indices[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)];
    }
    const std::int32_t* row(std::size_t i) const {
        return indices.data() + i * static_cast<std::size_t>(k);
    }
};

template <typename T>
inline T squared_distance(const T* a, const T* b, std::size_t dims) {
    T acc = T(0);
    for (std::size_t d = 0; d < dims; ++d) {
        T diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

namespace detail {

inline void check_knn_args(std::size_t n, int k) {
    if (n == 0) throw ValidationError("knn: empty point set");
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw ValidationError("knn: k=" + std::to_string(k) + " must be in [1, " +
                              std::to_string(n) + "]");
    }
}

} // namespace detail

/// Exact kNN by pairwise scan, O(N^2 * dims). Works in any dimension, so this
/// is also the feature-space path.
template <typename T>
NeighborGraph knn_bruteforce(const T* pts, std::size_t n, std::size_t dims, int k) {
    detail::check_knn_args(n, k);
    NeighborGraph g;
    g.n = n;
    g.k = k;
    g.indices.resize(n * static_cast<std::size_t>(k));

    std::vector<std::pair<T, std::int32_t>> cand(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const T* pi = pts + i * dims;
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cand[m++] = {squared_distance(pi, pts + j * dims, dims),
                         static_cast<std::int32_t>(j)};
        }
        std::size_t want = static_cast<std::size_t>(k - 1);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want),
                          cand.end());
        std::int32_t* row = g.indices.data() + i * static_cast<std::size_t>(k);
        row[0] = static_cast<std::int32_t>(i);
        for (std::size_t j = 0; j < want; ++j) row[j + 1] = cand[j].second;
    }
    return g;
}

template <typename T>
NeighborGraph knn_bruteforce(const Tensor<T>& x, int k) {
    if (x.rank() != 2) throw ShapeError("knn: expected [N, C] points, got " + shape_str(x.shape()));
    return knn_bruteforce(x.data(), x.dim(0), x.dim(1), k);
}

} // namespace pointgr
