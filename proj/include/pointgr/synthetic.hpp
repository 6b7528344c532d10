#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pointgr/manifest.hpp"
#include "pointgr/point_cloud.hpp"

namespace pointgr {

// Analytic shape samplers, uniform over the surface at unit pose. Exposed so
// tests can check the geometry before augmentation.
Tensor<float> sample_sphere_surface(std::size_t n, float radius, Rng& rng);
Tensor<float> sample_cube_surface(std::size_t n, float half, Rng& rng);
Tensor<float> sample_cylinder_surface(std::size_t n, float radius, float half_height, Rng& rng);

/// Uniformly distributed rotation matrix (row-major 3x3), via the quaternion
/// method.
template <typename T>
std::array<T, 9> random_rotation(Rng& rng);

void apply_rotation(Tensor<float>& pts, const std::array<float, 9>& rot);

/// Three analytic classes (sphere, cube, cylinder surfaces), each sample
/// randomly rotated, scaled by a factor in [0.8, 1.2], and perturbed with
/// Gaussian noise sigma = 0.01. Writes PGRC files plus manifest.txt into
/// out_dir. The first round(per_class * train_fraction) samples of each
/// class land in the train split.
DatasetManifest make_synthetic_classification(const std::string& out_dir, std::size_t per_class,
                                              std::size_t n_points, std::uint64_t seed,
                                              double train_fraction = 0.8);

/// Two-category part segmentation toy set. Category 0 "hammer" = handle
/// cylinder (part 0) + head box (part 1); category 1 "lollipop" = stick
/// cylinder (part 2) + candy sphere (part 3). Points are allocated between
/// the two parts by surface area and labeled by construction.
DatasetManifest make_synthetic_partseg(const std::string& out_dir, std::size_t per_category,
                                       std::size_t n_points, std::uint64_t seed,
                                       double train_fraction = 0.8);

/// One rectangular room: floor (label 0), four walls (label 1), and a few
/// boxes (label 2), sampled by surface area. points is [N, 6] with RGB in
/// [0, 1]; per-point labels ride in part_labels.
PointCloud make_synthetic_room(float size_x, float size_y, float height, std::size_t n_points,
                               std::uint64_t seed);

/// Rooms split into 1 m blocks of block_points each (see
/// split_room_into_blocks); every block becomes one 9-channel PGRC sample.
DatasetManifest make_synthetic_sceneseg(const std::string& out_dir, std::size_t rooms,
                                        std::size_t points_per_room, std::size_t block_points,
                                        std::uint64_t seed, double train_fraction = 0.8);

} // namespace pointgr
