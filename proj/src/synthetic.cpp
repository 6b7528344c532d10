#include "pointgr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>

#include "pointgr/scene_blocks.hpp"

namespace pointgr {

namespace {

constexpr float kTau = 2.0f * std::numbers::pi_v<float>;

float unit(Rng& rng) {
    return std::uniform_real_distribution<float>(0.0f, 1.0f)(rng);
}

void add_noise(Tensor<float>& pts, float sigma, Rng& rng) {
    std::normal_distribution<float> noise(0.0f, sigma);
    for (std::size_t i = 0; i < pts.numel(); ++i) pts[i] += noise(rng);
}

void scale_points(Tensor<float>& pts, float s) {
    for (std::size_t i = 0; i < pts.numel(); ++i) pts[i] *= s;
}

void translate_points(Tensor<float>& pts, float dx, float dy, float dz) {
    const std::size_t n = pts.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i * 3 + 0] += dx;
        pts[i * 3 + 1] += dy;
        pts[i * 3 + 2] += dz;
    }
}

/// Axis-aligned box surface, faces weighted by area, centered at origin.
Tensor<float> sample_box_surface(std::size_t n, float hx, float hy, float hz, Rng& rng) {
    const float area_xy = hx * hy, area_yz = hy * hz, area_xz = hx * hz;
    const float total = 2.0f * (area_xy + area_yz + area_xz);
    Tensor<float> out({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        float pick = unit(rng) * total;
        float u = unit(rng) * 2.0f - 1.0f;
        float v = unit(rng) * 2.0f - 1.0f;
        float* p = out.data() + i * 3;
        if (pick < 2.0f * area_xy) {
            p[0] = u * hx;
            p[1] = v * hy;
            p[2] = pick < area_xy ? hz : -hz;
        } else if (pick < 2.0f * (area_xy + area_yz)) {
            p[0] = pick < 2.0f * area_xy + area_yz ? hx : -hx;
            p[1] = u * hy;
            p[2] = v * hz;
        } else {
            p[0] = u * hx;
            p[1] = pick < 2.0f * (area_xy + area_yz) + area_xz ? hy : -hy;
            p[2] = v * hz;
        }
    }
    return out;
}

std::string write_cloud(const std::filesystem::path& dir, const std::string& name,
                        const PointCloud& pc) {
    write_sample(pc, (dir / name).string());
    return name;
}

} // namespace

Tensor<float> sample_sphere_surface(std::size_t n, float radius, Rng& rng) {
    Tensor<float> out({n, 3});
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    for (std::size_t i = 0; i < n; ++i) {
        float x, y, z, norm;
        do {
            x = gauss(rng);
            y = gauss(rng);
            z = gauss(rng);
            norm = std::sqrt(x * x + y * y + z * z);
        } while (norm < 1e-6f);
        out[i * 3 + 0] = radius * x / norm;
        out[i * 3 + 1] = radius * y / norm;
        out[i * 3 + 2] = radius * z / norm;
    }
    return out;
}

Tensor<float> sample_cube_surface(std::size_t n, float half, Rng& rng) {
    return sample_box_surface(n, half, half, half, rng);
}

Tensor<float> sample_cylinder_surface(std::size_t n, float radius, float half_height, Rng& rng) {
    const float area_side = kTau * radius * 2.0f * half_height;
    const float area_cap = std::numbers::pi_v<float> * radius * radius;
    const float total = area_side + 2.0f * area_cap;
    Tensor<float> out({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        float pick = unit(rng) * total;
        float theta = unit(rng) * kTau;
        float* p = out.data() + i * 3;
        if (pick < area_side) {
            p[0] = radius * std::cos(theta);
            p[1] = radius * std::sin(theta);
            p[2] = (unit(rng) * 2.0f - 1.0f) * half_height;
        } else {
            float rho = radius * std::sqrt(unit(rng));
            p[0] = rho * std::cos(theta);
            p[1] = rho * std::sin(theta);
            p[2] = pick < area_side + area_cap ? half_height : -half_height;
        }
    }
    return out;
}

template <typename T>
std::array<T, 9> random_rotation(Rng& rng) {
    std::uniform_real_distribution<T> u01(T(0), T(1));
    const T u1 = u01(rng), u2 = u01(rng), u3 = u01(rng);
    const T tau = T(2) * std::numbers::pi_v<T>;
    const T a = std::sqrt(T(1) - u1), b = std::sqrt(u1);
    const T x = a * std::sin(tau * u2);
    const T y = a * std::cos(tau * u2);
    const T z = b * std::sin(tau * u3);
    const T w = b * std::cos(tau * u3);
    return {T(1) - T(2) * (y * y + z * z), T(2) * (x * y - z * w),     T(2) * (x * z + y * w),
            T(2) * (x * y + z * w),       T(1) - T(2) * (x * x + z * z), T(2) * (y * z - x * w),
            T(2) * (x * z - y * w),       T(2) * (y * z + x * w),     T(1) - T(2) * (x * x + y * y)};
}

template std::array<float, 9> random_rotation<float>(Rng&);
template std::array<double, 9> random_rotation<double>(Rng&);

void apply_rotation(Tensor<float>& pts, const std::array<float, 9>& rot) {
    const std::size_t n = pts.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        float* p = pts.data() + i * 3;
        float x = p[0], y = p[1], z = p[2];
        p[0] = rot[0] * x + rot[1] * y + rot[2] * z;
        p[1] = rot[3] * x + rot[4] * y + rot[5] * z;
        p[2] = rot[6] * x + rot[7] * y + rot[8] * z;
    }
}

DatasetManifest make_synthetic_classification(const std::string& out_dir, std::size_t per_class,
                                              std::size_t n_points, std::uint64_t seed,
                                              double train_fraction) {
    if (per_class == 0 || n_points == 0) {
        throw ValidationError("make_synthetic_classification: counts must be >= 1");
    }
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    DatasetManifest m;
    m.task = Task::classification;
    m.num_classes = 3;
    m.channels = 3;
    const auto train_count = static_cast<std::size_t>(std::llround(
        static_cast<double>(per_class) * train_fraction));

    static const char* kNames[3] = {"sphere", "cube", "cylinder"};
    for (std::size_t cls = 0; cls < 3; ++cls) {
        for (std::size_t idx = 0; idx < per_class; ++idx) {
            Rng rng = make_rng(derive_seed(derive_seed(seed, cls), idx));
            Tensor<float> pts;
            switch (cls) {
                case 0: pts = sample_sphere_surface(n_points, 1.0f, rng); break;
                case 1: pts = sample_cube_surface(n_points, 1.0f, rng); break;
                default: pts = sample_cylinder_surface(n_points, 0.5f, 1.0f, rng); break;
            }
            apply_rotation(pts, random_rotation<float>(rng));
            scale_points(pts, 0.8f + 0.4f * unit(rng));
            add_noise(pts, 0.01f, rng);

            PointCloud pc;
            pc.points = std::move(pts);
            pc.class_label = static_cast<std::int32_t>(cls);
            std::string name = std::string(kNames[cls]) + "_" + std::to_string(idx) + ".pgrc";
            m.records.push_back({write_cloud(dir, name, pc),
                                 idx < train_count ? "train" : "test"});
        }
    }
    save_manifest(m, (dir / "manifest.txt").string());
    return m;
}

DatasetManifest make_synthetic_partseg(const std::string& out_dir, std::size_t per_category,
                                       std::size_t n_points, std::uint64_t seed,
                                       double train_fraction) {
    if (per_category == 0 || n_points < 8) {
        throw ValidationError("make_synthetic_partseg: need >= 1 sample and >= 8 points");
    }
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    DatasetManifest m;
    m.task = Task::partseg;
    m.num_classes = 4;
    m.channels = 3;
    const auto train_count = static_cast<std::size_t>(std::llround(
        static_cast<double>(per_category) * train_fraction));

    const float pi = std::numbers::pi_v<float>;
    static const char* kNames[2] = {"hammer", "lollipop"};
    for (std::size_t cat = 0; cat < 2; ++cat) {
        for (std::size_t idx = 0; idx < per_category; ++idx) {
            Rng rng = make_rng(derive_seed(derive_seed(seed, 100 + cat), idx));
            PointCloud pc;
            pc.category = static_cast<std::int32_t>(cat);
            pc.part_labels.resize(n_points);

            // split the budget between the two parts by surface area
            float area_a, area_b;
            if (cat == 0) {
                area_a = kTau * 0.05f * 1.0f;                       // handle side
                area_b = 8.0f * (0.35f * 0.1f + 0.1f * 0.1f + 0.35f * 0.1f);  // head box
            } else {
                area_a = kTau * 0.03f * 0.9f;                       // stick side
                area_b = 4.0f * pi * 0.3f * 0.3f;                   // candy sphere
            }
            auto n_a = static_cast<std::size_t>(std::llround(
                static_cast<double>(n_points) * area_a / (area_a + area_b)));
            n_a = std::min(std::max<std::size_t>(n_a, 1), n_points - 1);
            const std::size_t n_b = n_points - n_a;

            Tensor<float> part_a, part_b;
            if (cat == 0) {
                part_a = sample_cylinder_surface(n_a, 0.05f, 0.5f, rng);
                translate_points(part_a, 0.0f, 0.0f, 0.5f);
                part_b = sample_box_surface(n_b, 0.35f, 0.1f, 0.1f, rng);
                translate_points(part_b, 0.0f, 0.0f, 1.1f);
            } else {
                part_a = sample_cylinder_surface(n_a, 0.03f, 0.45f, rng);
                translate_points(part_a, 0.0f, 0.0f, 0.45f);
                part_b = sample_sphere_surface(n_b, 0.3f, rng);
                translate_points(part_b, 0.0f, 0.0f, 1.15f);
            }

            pc.points = Tensor<float>({n_points, 3});
            std::copy_n(part_a.data(), part_a.numel(), pc.points.data());
            std::copy_n(part_b.data(), part_b.numel(), pc.points.data() + part_a.numel());
            const auto base = static_cast<std::int32_t>(2 * cat);
            for (std::size_t i = 0; i < n_points; ++i) {
                pc.part_labels[i] = i < n_a ? base : base + 1;
            }
            add_noise(pc.points, 0.005f, rng);

            std::string name = std::string(kNames[cat]) + "_" + std::to_string(idx) + ".pgrc";
            m.records.push_back({write_cloud(dir, name, pc),
                                 idx < train_count ? "train" : "test"});
        }
    }
    save_manifest(m, (dir / "manifest.txt").string());
    return m;
}

PointCloud make_synthetic_room(float size_x, float size_y, float height, std::size_t n_points,
                               std::uint64_t seed) {
    if (size_x <= 0.0f || size_y <= 0.0f || height <= 0.0f || n_points == 0) {
        throw ValidationError("make_synthetic_room: extents and point count must be positive");
    }
    Rng rng = make_rng(seed);

    struct Surface {
        float area;
        std::int32_t label;
        // returns xyz
        std::function<std::array<float, 3>(Rng&)> draw;
        std::array<float, 3> color;
    };
    std::vector<Surface> surfaces;

    auto u = [&](float lo, float hi) {
        return std::uniform_real_distribution<float>(lo, hi)(rng);
    };

    surfaces.push_back({size_x * size_y, 0,
                        [=](Rng& r) -> std::array<float, 3> {
                            std::uniform_real_distribution<float> ux(0.0f, size_x), uy(0.0f, size_y);
                            return {ux(r), uy(r), 0.0f};
                        },
                        {0.45f, 0.42f, 0.40f}});
    for (int wall = 0; wall < 4; ++wall) {
        const bool along_x = wall < 2;
        const float len = along_x ? size_x : size_y;
        const float fixed = (wall % 2 == 0) ? 0.0f : (along_x ? size_y : size_x);
        surfaces.push_back({len * height, 1,
                            [=](Rng& r) -> std::array<float, 3> {
                                std::uniform_real_distribution<float> ul(0.0f, len), uh(0.0f, height);
                                float t = ul(r), z = uh(r);
                                return along_x ? std::array<float, 3>{t, fixed, z}
                                               : std::array<float, 3>{fixed, t, z};
                            },
                            {0.75f, 0.72f, 0.65f}});
    }
    const int n_boxes = 2 + static_cast<int>(u(0.0f, 2.999f));
    for (int box = 0; box < n_boxes; ++box) {
        const float hx = u(0.15f, 0.4f), hy = u(0.15f, 0.4f), hz = u(0.2f, 0.6f);
        const float cx = u(hx + 0.1f, std::max(size_x - hx - 0.1f, hx + 0.15f));
        const float cy = u(hy + 0.1f, std::max(size_y - hy - 0.1f, hy + 0.15f));
        const std::array<float, 3> color{u(0.1f, 0.9f), u(0.1f, 0.9f), u(0.1f, 0.9f)};
        const float area = 8.0f * (hx * hy + hy * hz + hx * hz);
        surfaces.push_back({area, 2,
                            [=](Rng& r) -> std::array<float, 3> {
                                Tensor<float> p = sample_box_surface(1, hx, hy, hz, r);
                                return {p[0] + cx, p[1] + cy, p[2] + hz};
                            },
                            color});
    }

    float total_area = 0.0f;
    for (const Surface& s : surfaces) total_area += s.area;

    PointCloud room;
    room.points = Tensor<float>({n_points, 6});
    room.part_labels.resize(n_points);
    std::normal_distribution<float> color_noise(0.0f, 0.03f);
    for (std::size_t i = 0; i < n_points; ++i) {
        float pick = u(0.0f, total_area);
        std::size_t s = 0;
        while (s + 1 < surfaces.size() && pick >= surfaces[s].area) {
            pick -= surfaces[s].area;
            ++s;
        }
        const std::array<float, 3> xyz = surfaces[s].draw(rng);
        float* p = room.points.data() + i * 6;
        p[0] = xyz[0];
        p[1] = xyz[1];
        p[2] = xyz[2];
        for (int d = 0; d < 3; ++d) {
            p[3 + d] = std::clamp(surfaces[s].color[static_cast<std::size_t>(d)] + color_noise(rng),
                                  0.0f, 1.0f);
        }
        room.part_labels[i] = surfaces[s].label;
    }
    return room;
}

DatasetManifest make_synthetic_sceneseg(const std::string& out_dir, std::size_t rooms,
                                        std::size_t points_per_room, std::size_t block_points,
                                        std::uint64_t seed, double train_fraction) {
    if (rooms == 0 || points_per_room == 0 || block_points == 0) {
        throw ValidationError("make_synthetic_sceneseg: counts must be >= 1");
    }
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    DatasetManifest m;
    m.task = Task::sceneseg;
    m.num_classes = 3;
    m.channels = 9;
    const auto train_rooms = static_cast<std::size_t>(std::llround(
        static_cast<double>(rooms) * train_fraction));

    for (std::size_t r = 0; r < rooms; ++r) {
        Rng rng = make_rng(derive_seed(seed, 500 + r));
        std::uniform_real_distribution<float> ext(2.0f, 3.5f);
        PointCloud room = make_synthetic_room(ext(rng), ext(rng), 2.5f, points_per_room,
                                              derive_seed(seed, 600 + r));
        std::vector<SceneBlock> blocks =
            split_room_into_blocks(room, 1.0f, block_points, derive_seed(seed, 700 + r));
        const std::string split = r < train_rooms ? "train" : "test";
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            PointCloud pc;
            pc.points = std::move(blocks[b].points);
            pc.part_labels = std::move(blocks[b].labels);
            std::string name = "room" + std::to_string(r) + "_block" + std::to_string(b) + ".pgrc";
            m.records.push_back({write_cloud(dir, name, pc), split});
        }
    }
    if (m.records.empty()) {
        throw ValidationError("make_synthetic_sceneseg: no blocks survived the population cutoff");
    }
    save_manifest(m, (dir / "manifest.txt").string());
    return m;
}

} // namespace pointgr
