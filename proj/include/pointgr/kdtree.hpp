#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "pointgr/knn.hpp"

namespace pointgr {

/// Exact 3-D kd-tree. Returns the same neighbors in the same order as
/// knn_bruteforce: results are ranked by (squared distance, point index), and
/// subtrees are only pruned when they provably cannot contain a better
/// candidate, so distance ties resolve identically.
template <typename T>
class KdTree3 {
public:
    KdTree3(const T* pts, std::size_t n) : pts_(pts), n_(n) {
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::int32_t>(i);
        nodes_.reserve(2 * n / kLeafSize + 2);
        root_ = build(0, static_cast<std::int32_t>(n));
    }

    /// k best (squared distance, index) pairs for `query`, ascending.
    void knn(const T* query, int k, std::vector<std::pair<T, std::int32_t>>& out) const {
        out.clear();
        heap_.clear();
        search(root_, query, static_cast<std::size_t>(k));
        out.assign(heap_.begin(), heap_.end());
        std::sort(out.begin(), out.end());
    }

private:
    static constexpr std::int32_t kLeafSize = 16;

    struct Node {
        T split = T(0);
        std::int32_t axis = -1;      // -1 marks a leaf
        std::int32_t left = -1;      // child node ids, or [begin, end) of order_
        std::int32_t right = -1;
        std::int32_t begin = 0;
        std::int32_t end = 0;
    };

    const T* coord(std::int32_t idx, int axis) const {
        return pts_ + static_cast<std::size_t>(idx) * 3 + axis;
    }

    std::int32_t build(std::int32_t begin, std::int32_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        if (end - begin <= kLeafSize) {
            nodes_.push_back(node);
            return static_cast<std::int32_t>(nodes_.size() - 1);
        }
        // split the widest axis at the median
        std::array<T, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = hi[a] = *coord(order_[static_cast<std::size_t>(begin)], a);
        }
        for (std::int32_t i = begin + 1; i < end; ++i) {
            for (int a = 0; a < 3; ++a) {
                T v = *coord(order_[static_cast<std::size_t>(i)], a);
                lo[a] = std::min(lo[a], v);
                hi[a] = std::max(hi[a], v);
            }
        }
        int axis = 0;
        for (int a = 1; a < 3; ++a) {
            if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
        }
        std::int32_t mid = begin + (end - begin) / 2;
        auto first = order_.begin() + begin;
        std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                         [&](std::int32_t a, std::int32_t b) {
                             T ca = *coord(a, axis), cb = *coord(b, axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        node.axis = axis;
        node.split = *coord(order_[static_cast<std::size_t>(mid)], axis);
        std::int32_t id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(node);
        std::int32_t left = build(begin, mid);
        std::int32_t right = build(mid, end);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void push_candidate(T d2, std::int32_t idx, std::size_t k) const {
        std::pair<T, std::int32_t> c{d2, idx};
        if (heap_.size() < k) {
            heap_.push_back(c);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (c < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = c;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    void search(std::int32_t id, const T* query, std::size_t k) const {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (std::int32_t i = node.begin; i < node.end; ++i) {
                std::int32_t idx = order_[static_cast<std::size_t>(i)];
                push_candidate(squared_distance(query, pts_ + static_cast<std::size_t>(idx) * 3, 3),
                               idx, k);
            }
            return;
        }
        T diff = query[node.axis] - node.split;
        std::int32_t near = diff < T(0) ? node.left : node.right;
        std::int32_t far = diff < T(0) ? node.right : node.left;
        search(near, query, k);
        // The far half-space may still hold an equal-distance, lower-index
        // candidate, so only prune on a strictly worse plane distance.
        if (heap_.size() < k || diff * diff <= heap_.front().first) {
            search(far, query, k);
        }
    }

    const T* pts_;
    std::size_t n_;
    std::vector<std::int32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
    mutable std::vector<std::pair<T, std::int32_t>> heap_;
};

/// Exact kNN over 3-D coordinates through a kd-tree. Identical output to
/// knn_bruteforce on every input.
template <typename T>
NeighborGraph knn_indexed(const T* pts, std::size_t n, int k) {
    detail::check_knn_args(n, k);
    KdTree3<T> tree(pts, n);
    NeighborGraph g;
    g.n = n;
    g.k = k;
    g.indices.resize(n * static_cast<std::size_t>(k));

    std::vector<std::pair<T, std::int32_t>> found;
    for (std::size_t i = 0; i < n; ++i) {
        tree.knn(pts + i * 3, k, found);
        std::int32_t* row = g.indices.data() + i * static_cast<std::size_t>(k);
        row[0] = static_cast<std::int32_t>(i);
        // drop self if present, else the worst candidate
        int w = 1;
        for (std::size_t j = 0; j < found.size() && w < k; ++j) {
            if (found[j].second == static_cast<std::int32_t>(i)) continue;
            row[w++] = found[j].second;
        }
    }
    return g;
}

template <typename T>
NeighborGraph knn_indexed(const Tensor<T>& x, int k) {
    if (x.rank() != 2 || x.dim(1) != 3) {
        throw ShapeError("knn_indexed: expected [N, 3] coordinates, got " + shape_str(x.shape()));
    }
    return knn_indexed(x.data(), x.dim(0), k);
}

} // namespace pointgr
