#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointgr/rng.hpp"
#include "pointgr/tensor.hpp"

namespace pointgr {

/// One sample: an N x C attribute matrix (columns 0-2 are x, y, z) plus
/// optional labels. class_label and category use -1 for "absent";
/// part_labels is absent when empty.
struct PointCloud {
    Tensor<float> points;
    std::int32_t class_label = -1;
    std::int32_t category = -1;
    std::vector<std::int32_t> part_labels;

    std::size_t size() const { return points.empty() ? 0 : points.dim(0); }
    std::size_t channels() const { return points.empty() ? 0 : points.dim(1); }
};

/// Checks the structural invariants: N >= 1, C >= 3, finite coordinates,
/// part label count matching N. Throws ValidationError.
void validate_point_cloud(const PointCloud& pc);

/// PGRC sample file. Layout, little endian: magic "PGRC", version u16 = 1,
/// flags u8 (bit0 class_label, bit1 part_labels, bit2 category), N u32,
/// C u16, class_label u16 when flagged, category u16 when flagged, N*C f32
/// row-major, then N u16 part labels when flagged. write/read round-trips
/// bit-exactly.
void write_sample(const PointCloud& pc, const std::string& path);
PointCloud read_sample(const std::string& path);

/// n indices drawn uniformly from [0, population): without replacement when
/// n <= population (a uniform partial shuffle, so n == population yields a
/// permutation), independent draws with replacement otherwise.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng);

/// Uniformly resample a cloud to n points, carrying per-point labels along.
PointCloud uniform_sample(const PointCloud& pc, std::size_t n, std::uint64_t seed);

} // namespace pointgr
