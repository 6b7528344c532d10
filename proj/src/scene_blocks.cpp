#include "pointgr/scene_blocks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pointgr/errors.hpp"

namespace pointgr {

namespace {
constexpr std::size_t kMinBlockPopulation = 100;
}

std::vector<SceneBlock> split_room_into_blocks(const PointCloud& room, float block_size,
                                               std::size_t n, std::uint64_t seed) {
    validate_point_cloud(room);
    if (room.channels() < 6) {
        throw ValidationError("split_room_into_blocks: room needs xyz + rgb columns");
    }
    if (room.part_labels.empty()) {
        throw ValidationError("split_room_into_blocks: room needs per-point labels");
    }
    if (block_size <= 0.0f) throw ValidationError("split_room_into_blocks: block size must be > 0");
    if (n == 0) throw ValidationError("split_room_into_blocks: n must be >= 1");

    const std::size_t total = room.size(), c = room.channels();
    const float* pts = room.points.data();

    float lo[3], hi[3];
    for (int d = 0; d < 3; ++d) lo[d] = hi[d] = pts[d];
    for (std::size_t i = 1; i < total; ++i) {
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], pts[i * c + d]);
            hi[d] = std::max(hi[d], pts[i * c + d]);
        }
    }
    float span[3];
    for (int d = 0; d < 3; ++d) span[d] = std::max(hi[d] - lo[d], 1e-6f);

    // assign points to xy tiles anchored at the room minimum
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> tiles;
    for (std::size_t i = 0; i < total; ++i) {
        auto tx = static_cast<std::int64_t>(std::floor((pts[i * c + 0] - lo[0]) / block_size));
        auto ty = static_cast<std::int64_t>(std::floor((pts[i * c + 1] - lo[1]) / block_size));
        tiles[{tx, ty}].push_back(i);
    }

    Rng rng = make_rng(seed);
    std::vector<SceneBlock> out;
    for (auto& [key, members] : tiles) {
        if (members.size() < kMinBlockPopulation) continue;
        std::shuffle(members.begin(), members.end(), rng);
        const float ox = lo[0] + static_cast<float>(key.first) * block_size;
        const float oy = lo[1] + static_cast<float>(key.second) * block_size;

        const std::size_t chunks = (members.size() + n - 1) / n;
        for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
            SceneBlock block;
            block.points = Tensor<float>({n, 9});
            block.labels.resize(n);
            block.source_indices.resize(n);
            for (std::size_t row = 0; row < n; ++row) {
                std::size_t pos = chunk * n + row;
                if (pos >= members.size()) {
                    // pad the tail chunk by resampling the tile
                    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
                    pos = pick(rng);
                }
                const std::size_t src = members[pos];
                const float* p = pts + src * c;
                float* q = block.points.data() + row * 9;
                q[0] = p[0] - ox;
                q[1] = p[1] - oy;
                q[2] = p[2] - lo[2];
                q[3] = p[3];
                q[4] = p[4];
                q[5] = p[5];
                q[6] = (p[0] - lo[0]) / span[0];
                q[7] = (p[1] - lo[1]) / span[1];
                q[8] = (p[2] - lo[2]) / span[2];
                block.labels[row] = room.part_labels[src];
                block.source_indices[row] = static_cast<std::int64_t>(src);
            }
            out.push_back(std::move(block));
        }
    }
    return out;
}

} // namespace pointgr
