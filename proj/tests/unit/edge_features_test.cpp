#include <doctest.h>

#include "pointgr/edge_features.hpp"
#include "pointgr/rng.hpp"

using namespace pointgr;

TEST_CASE("edge row concatenates the point and its offset to the neighbor") {
    Tensor<float> x({2, 3}, {0, 0, 0, 1, 0, 0});
    NeighborGraph g = knn_bruteforce(x, 2);
    Tensor<float> e = build_edge_features(x, g);
    CHECK(e.shape() == Shape{2, 2, 6});
    // point 0, neighbor 1: [x_0, x_0 - x_1]
    std::vector<float> row(e.data() + 6, e.data() + 12);
    CHECK(row == std::vector<float>{0, 0, 0, -1, 0, 0});
}

TEST_CASE("self edge has zero offset") {
    Rng rng = make_rng(2);
    Tensor<float> x = random_uniform<float>(rng, {9, 3}, -1.0f, 1.0f);
    NeighborGraph g = knn_bruteforce(x, 4);
    Tensor<float> e = build_edge_features(x, g);
    for (std::size_t i = 0; i < 9; ++i) {
        const float* self_row = e.data() + (i * 4 + 0) * 6;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(self_row[c] == x[i * 3 + c]);
            CHECK(self_row[3 + c] == 0.0f);
        }
    }
}

TEST_CASE("replication and differences match a loop oracle") {
    Rng rng = make_rng(8);
    Tensor<float> x = random_uniform<float>(rng, {16, 4}, -2.0f, 2.0f);
    NeighborGraph g = knn_bruteforce(x, 3);
    Tensor<float> e = build_edge_features(x, g);
    CHECK(e.shape() == Shape{16, 3, 8});
    for (std::size_t i = 0; i < 16; ++i) {
        for (int j = 0; j < 3; ++j) {
            const float* row = e.data() + (i * 3 + j) * 8;
            std::size_t nb = static_cast<std::size_t>(g.at(i, j));
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(row[c] == x[i * 4 + c]);
                CHECK(row[4 + c] == x[i * 4 + c] - x[nb * 4 + c]);
            }
        }
    }
}

TEST_CASE("offsets are translation invariant") {
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<float> x = random_uniform<float>(rng, {24, 3}, -1.0f, 1.0f);
        Tensor<float> t = random_uniform<float>(rng, {3}, -4.0f, 4.0f);
        Tensor<float> shifted = x;
        for (std::size_t i = 0; i < 24; ++i) {
            for (std::size_t c = 0; c < 3; ++c) shifted[i * 3 + c] += t[c];
        }
        NeighborGraph gx = knn_bruteforce(x, 5);
        NeighborGraph gs = knn_bruteforce(shifted, 5);
        CHECK(gx.indices == gs.indices);

        Tensor<float> ex = build_edge_features(x, gx);
        Tensor<float> es = build_edge_features(shifted, gs);
        for (std::size_t i = 0; i < 24; ++i) {
            for (int j = 0; j < 5; ++j) {
                const float* rx = ex.data() + (i * 5 + j) * 6;
                const float* rs = es.data() + (i * 5 + j) * 6;
                for (std::size_t c = 0; c < 3; ++c) {
                    CHECK(std::abs(rs[3 + c] - rx[3 + c]) <= 1e-5f);
                }
            }
        }
    }
}

TEST_CASE("feature-space composition yields the doubled channel width") {
    Rng rng = make_rng(14);
    Tensor<float> x = random_uniform<float>(rng, {20, 7}, -1.0f, 1.0f);
    auto [edges, graph] = multiscale_graph(x, 6);
    CHECK(edges.shape() == Shape{20, 6, 14});
    CHECK(graph.k == 6);
    CHECK(graph.indices == knn_bruteforce(x, 6).indices);
}

TEST_CASE("graph index out of range is rejected") {
    Tensor<float> x({2, 3}, {0, 0, 0, 1, 0, 0});
    NeighborGraph g = knn_bruteforce(x, 2);
    g.indices[1] = 9;
    CHECK_THROWS_AS(build_edge_features(x, g), ValidationError);
}
