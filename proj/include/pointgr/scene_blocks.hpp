#pragma once

#include <cstdint>
#include <vector>

#include "pointgr/point_cloud.hpp"

namespace pointgr {

/// One training block cut from a room. points is [n, 9]: block-local x, y
/// (z relative to the room floor), rgb in [0, 1], then the point's position
/// in room-normalized coordinates in [0, 1]. source_indices maps each row
/// back to the originating room point.
struct SceneBlock {
    Tensor<float> points;
    std::vector<std::int32_t> labels;
    std::vector<std::int64_t> source_indices;
};

/// Tiles the room's xy extent with `block_size` pitch starting at the room
/// minimum. Tiles holding fewer than 100 points are discarded; every other
/// tile is shuffled and emitted as ceil(population / n) blocks of exactly n
/// points, the last one padded by resampling, so every kept point appears in
/// some block. Returns an empty vector when no tile survives.
///
/// The room cloud must carry rgb in columns 3-5 and per-point labels.
std::vector<SceneBlock> split_room_into_blocks(const PointCloud& room, float block_size,
                                               std::size_t n, std::uint64_t seed);

} // namespace pointgr
