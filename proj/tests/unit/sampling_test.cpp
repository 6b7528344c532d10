#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <unistd.h>

#include "pointgr/synthetic.hpp"
#include "pointgr/weights_io.hpp"

using namespace pointgr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("pointgr_gen_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string dir() const { return path.string(); }
};

} // namespace

TEST_CASE("sampling the full population is a permutation") {
    Rng rng = make_rng(1);
    PointCloud pc;
    pc.points = random_uniform<float>(rng, {20, 3}, -1.0f, 1.0f);
    pc.class_label = 2;
    PointCloud out = uniform_sample(pc, 20, 5);
    CHECK(out.size() == 20);
    CHECK(out.class_label == 2);

    // every input row appears exactly once
    std::multiset<std::vector<float>> want, got;
    for (std::size_t i = 0; i < 20; ++i) {
        want.insert(std::vector<float>(pc.points.data() + i * 3, pc.points.data() + (i + 1) * 3));
        got.insert(std::vector<float>(out.points.data() + i * 3, out.points.data() + (i + 1) * 3));
    }
    CHECK(want == got);
}

TEST_CASE("single draws are uniform across seeds") {
    Tensor<float> pts({3, 3}, {0, 0, 0, 1, 1, 1, 2, 2, 2});
    PointCloud pc;
    pc.points = pts;
    std::array<int, 3> counts{0, 0, 0};
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        PointCloud out = uniform_sample(pc, 1, seed);
        counts[static_cast<std::size_t>(out.points[0])]++;
    }
    for (int c : counts) {
        CHECK(c >= 10000 * (1.0 / 3.0 - 0.02));
        CHECK(c <= 10000 * (1.0 / 3.0 + 0.02));
    }
}

TEST_CASE("oversampling draws with replacement from the input rows") {
    Rng rng = make_rng(2);
    PointCloud pc;
    pc.points = random_uniform<float>(rng, {1000, 3}, -1.0f, 1.0f);
    PointCloud out = uniform_sample(pc, 2048, 7);
    CHECK(out.size() == 2048);

    std::set<std::vector<float>> rows;
    for (std::size_t i = 0; i < 1000; ++i) {
        rows.insert(std::vector<float>(pc.points.data() + i * 3, pc.points.data() + (i + 1) * 3));
    }
    for (std::size_t i = 0; i < 2048; ++i) {
        std::vector<float> row(out.points.data() + i * 3, out.points.data() + (i + 1) * 3);
        CHECK(rows.count(row) == 1);
    }
}

TEST_CASE("part labels ride along with their points") {
    Rng rng = make_rng(3);
    PointCloud pc;
    pc.points = Tensor<float>({4, 3});
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t c = 0; c < 3; ++c) pc.points[i * 3 + c] = static_cast<float>(i);
    }
    pc.part_labels = {10, 11, 12, 13};
    PointCloud out = uniform_sample(pc, 9, 11);
    REQUIRE(out.part_labels.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(out.part_labels[i] == 10 + static_cast<std::int32_t>(out.points[i * 3]));
    }
}

TEST_CASE("sample_indices covers the basic contracts") {
    Rng rng = make_rng(4);
    std::vector<std::size_t> idx = sample_indices(50, 12, rng);
    CHECK(idx.size() == 12);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 12);  // without replacement when n <= population
    for (std::size_t v : idx) CHECK(v < 50);
}

TEST_CASE("sphere points sit on the sphere") {
    Rng rng = make_rng(5);
    Tensor<float> pts = sample_sphere_surface(500, 1.0f, rng);
    for (std::size_t i = 0; i < 500; ++i) {
        const float* p = pts.data() + i * 3;
        const float r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        CHECK(std::abs(r - 1.0f) <= 1e-6f);
    }
}

TEST_CASE("cube points sit on the cube surface") {
    Rng rng = make_rng(6);
    Tensor<float> pts = sample_cube_surface(500, 1.0f, rng);
    for (std::size_t i = 0; i < 500; ++i) {
        const float* p = pts.data() + i * 3;
        const float linf = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
        CHECK(linf == doctest::Approx(1.0f).epsilon(1e-6));
    }
}

TEST_CASE("cylinder points sit on the lateral surface or the caps") {
    Rng rng = make_rng(7);
    Tensor<float> pts = sample_cylinder_surface(500, 0.5f, 1.0f, rng);
    for (std::size_t i = 0; i < 500; ++i) {
        const float* p = pts.data() + i * 3;
        const float rad = std::sqrt(p[0] * p[0] + p[1] * p[1]);
        CHECK(std::abs(p[2]) <= 1.0f + 1e-6f);
        const bool lateral = std::abs(rad - 0.5f) <= 1e-6f;
        const bool cap = std::abs(std::abs(p[2]) - 1.0f) <= 1e-6f && rad <= 0.5f + 1e-6f;
        CHECK((lateral || cap));
    }
}

TEST_CASE("random rotations are orthonormal with determinant one") {
    Rng rng = make_rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<double, 9> r = random_rotation<double>(rng);
        // R R^T = I
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                double dot = 0;
                for (std::size_t k = 0; k < 3; ++k) dot += r[i * 3 + k] * r[j * 3 + k];
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
            }
        }
        const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                           r[2] * (r[3] * r[7] - r[4] * r[6]);
        CHECK(det == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("classification generator writes the advertised dataset") {
    TempDir tmp;
    DatasetManifest m = make_synthetic_classification(tmp.dir(), 50, 256, 9);
    CHECK(m.num_classes == 3);
    CHECK(m.channels == 3);
    CHECK(m.records.size() == 150);

    std::size_t train = 0;
    for (const auto& r : m.records) train += r.split == "train";
    CHECK(train == 120);  // 0.8 of 50 per class

    LoadedDataset ds = load_dataset(tmp.dir() + "/manifest.txt");
    CHECK(ds.train.size() == 120);
    CHECK(ds.test.size() == 30);
    for (const PointCloud& pc : ds.train) {
        CHECK(pc.size() == 256);
        CHECK(pc.class_label >= 0);
        CHECK(pc.class_label < 3);
    }
}

TEST_CASE("generators are pure functions of their seed") {
    TempDir a, b;
    make_synthetic_classification(a.dir(), 4, 64, 123);
    make_synthetic_classification(b.dir(), 4, 64, 123);
    CHECK(read_file_bytes(a.dir() + "/manifest.txt") == read_file_bytes(b.dir() + "/manifest.txt"));
    CHECK(read_file_bytes(a.dir() + "/sphere_0.pgrc") == read_file_bytes(b.dir() + "/sphere_0.pgrc"));
    CHECK(read_file_bytes(a.dir() + "/cylinder_3.pgrc") ==
          read_file_bytes(b.dir() + "/cylinder_3.pgrc"));

    TempDir c;
    make_synthetic_classification(c.dir(), 4, 64, 124);
    CHECK(read_file_bytes(a.dir() + "/sphere_0.pgrc") != read_file_bytes(c.dir() + "/sphere_0.pgrc"));
}

TEST_CASE("part segmentation samples carry consistent category and parts") {
    TempDir tmp;
    DatasetManifest m = make_synthetic_partseg(tmp.dir(), 6, 128, 31);
    CHECK(m.num_classes == 4);
    CHECK(m.records.size() == 12);
    LoadedDataset ds = load_dataset(tmp.dir() + "/manifest.txt");

    for (const PointCloud& pc : ds.train) {
        REQUIRE(pc.category >= 0);
        REQUIRE(pc.category < 2);
        REQUIRE(pc.part_labels.size() == 128);
        const std::int32_t base = pc.category * 2;
        std::set<std::int32_t> seen;
        for (std::int32_t p : pc.part_labels) {
            CHECK(p >= base);
            CHECK(p <= base + 1);
            seen.insert(p);
        }
        CHECK(seen.size() == 2);  // both parts present in every sample
    }

    auto catalog = part_catalog(ds);
    REQUIRE(catalog.size() == 2);
    CHECK(catalog[0] == std::vector<std::int32_t>{0, 1});
    CHECK(catalog[1] == std::vector<std::int32_t>{2, 3});
}

TEST_CASE("hammer and lollipop parts are geometrically separated") {
    TempDir tmp;
    make_synthetic_partseg(tmp.dir(), 2, 256, 77);
    PointCloud hammer = read_sample(tmp.dir() + "/hammer_0.pgrc");
    // part 0 is the handle cylinder, part 1 the head box above it
    float handle_top = -1e9f, head_bottom = 1e9f;
    for (std::size_t i = 0; i < hammer.size(); ++i) {
        const float z = hammer.points[i * 3 + 2];
        if (hammer.part_labels[i] == 0) handle_top = std::max(handle_top, z);
        if (hammer.part_labels[i] == 1) head_bottom = std::min(head_bottom, z);
    }
    CHECK(handle_top < head_bottom + 0.2f);
}
