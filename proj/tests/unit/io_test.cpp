#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "pointgr/checkpoint.hpp"
#include "pointgr/layers.hpp"
#include "pointgr/manifest.hpp"
#include "pointgr/optimizer.hpp"
#include "pointgr/train_config.hpp"

using namespace pointgr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pointgr_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

PointCloud random_sample(Rng& rng, std::size_t n, std::size_t c) {
    PointCloud pc;
    pc.points = random_uniform<float>(rng, {n, c}, -1.0f, 1.0f);
    return pc;
}

} // namespace

TEST_CASE("weights container round-trips bit-exactly") {
    TempDir tmp;
    Rng rng = make_rng(1);
    std::map<std::string, Tensor<float>> entries;
    entries.emplace("fc/w", random_uniform<float>(rng, {3, 4}, -1.0f, 1.0f));
    entries.emplace("fc/b", random_uniform<float>(rng, {4}, -1.0f, 1.0f));
    entries.emplace("scalar", Tensor<float>({1}, {0.25f}));

    const std::string path = tmp.file("w.pgrw");
    save_weights(path, entries);
    auto back = load_weights<float>(path);
    REQUIRE(back.size() == 3);
    for (const auto& [name, t] : entries) {
        CHECK(back.at(name).shape() == t.shape());
        CHECK(back.at(name).vec() == t.vec());
    }

    // rewriting the same content gives identical bytes
    const std::string path2 = tmp.file("w2.pgrw");
    save_weights(path2, back);
    CHECK(read_file_bytes(path) == read_file_bytes(path2));
}

TEST_CASE("weights entries are laid out in name order") {
    TempDir tmp;
    std::map<std::string, Tensor<float>> entries;
    entries.emplace("zz", Tensor<float>({1}, {1.0f}));
    entries.emplace("aa", Tensor<float>({1}, {2.0f}));
    entries.emplace("mm", Tensor<float>({1}, {3.0f}));
    const std::string path = tmp.file("o.pgrw");
    save_weights(path, entries);
    const std::string buf = read_file_bytes(path);
    CHECK(buf.find("aa") < buf.find("mm"));
    CHECK(buf.find("mm") < buf.find("zz"));
}

TEST_CASE("weights container rejects malformed files") {
    TempDir tmp;
    const std::string path = tmp.file("bad.pgrw");

    write_file_bytes(path, "NOPE");
    CHECK_THROWS_AS(load_weights<float>(path), IoError);

    std::map<std::string, Tensor<float>> entries;
    entries.emplace("x", Tensor<float>({4}, {1, 2, 3, 4}));
    save_weights(path, entries);
    std::string buf = read_file_bytes(path);

    // drop the last 6 bytes: the error must say how many are missing
    write_file_bytes(path, buf.substr(0, buf.size() - 6));
    CHECK_THROWS_WITH_AS(load_weights<float>(path), doctest::Contains("6 bytes missing"),
                         IoError);

    // trailing garbage
    write_file_bytes(path, buf + "xx");
    CHECK_THROWS_WITH_AS(load_weights<float>(path), doctest::Contains("trailing"), IoError);
}

TEST_CASE("float64 weights survive the round trip") {
    TempDir tmp;
    Rng rng = make_rng(2);
    std::map<std::string, Tensor<double>> entries;
    entries.emplace("p", random_uniform<double>(rng, {7}, -1.0, 1.0));
    const std::string path = tmp.file("d.pgrw");
    save_weights(path, entries);
    CHECK(load_weights<double>(path).at("p").vec() == entries.at("p").vec());
}

TEST_CASE("samples round-trip for every label combination") {
    TempDir tmp;
    Rng rng = make_rng(3);
    for (int flags = 0; flags < 8; ++flags) {
        PointCloud pc = random_sample(rng, 128, 3);
        if (flags & 1) pc.class_label = 7;
        if (flags & 2) {
            pc.part_labels.assign(128, 0);
            for (std::size_t i = 0; i < 128; ++i) pc.part_labels[i] = i % 5;
        }
        if (flags & 4) pc.category = 3;
        const std::string path = tmp.file("s" + std::to_string(flags) + ".pgrc");
        write_sample(pc, path);
        PointCloud back = read_sample(path);
        CHECK(back.points.shape() == pc.points.shape());
        CHECK(back.points.vec() == pc.points.vec());
        CHECK(back.class_label == pc.class_label);
        CHECK(back.category == pc.category);
        CHECK(back.part_labels == pc.part_labels);

        // writing the reloaded cloud reproduces the file bytes
        const std::string path2 = tmp.file("t" + std::to_string(flags) + ".pgrc");
        write_sample(back, path2);
        CHECK(read_file_bytes(path) == read_file_bytes(path2));
    }
}

TEST_CASE("sample reader rejects damage") {
    TempDir tmp;
    Rng rng = make_rng(4);
    PointCloud pc = random_sample(rng, 16, 3);
    pc.class_label = 1;
    const std::string path = tmp.file("x.pgrc");
    write_sample(pc, path);
    std::string buf = read_file_bytes(path);

    write_file_bytes(path, buf.substr(0, 10));
    CHECK_THROWS_WITH_AS(read_sample(path), doctest::Contains("bytes missing"), IoError);

    write_file_bytes(path, "ABCD" + buf.substr(4));
    CHECK_THROWS_AS(read_sample(path), IoError);

    write_file_bytes(path, buf + "z");
    CHECK_THROWS_AS(read_sample(path), IoError);
}

TEST_CASE("sample writer validates the cloud first") {
    TempDir tmp;
    Rng rng = make_rng(5);
    PointCloud pc = random_sample(rng, 8, 3);
    pc.part_labels.assign(5, 0);  // wrong length
    CHECK_THROWS_AS(write_sample(pc, tmp.file("bad.pgrc")), ValidationError);

    PointCloud flat;
    flat.points = Tensor<float>({4, 2});
    CHECK_THROWS_AS(write_sample(flat, tmp.file("flat.pgrc")), ValidationError);

    PointCloud empty;
    CHECK_THROWS_AS(write_sample(empty, tmp.file("empty.pgrc")), ValidationError);
}

TEST_CASE("manifest round-trips and validates") {
    TempDir tmp;
    DatasetManifest m;
    m.task = Task::partseg;
    m.num_classes = 4;
    m.channels = 3;
    m.records = {{"a.pgrc", "train"}, {"b.pgrc", "test"}};
    const std::string path = tmp.file("manifest.txt");
    save_manifest(m, path);
    DatasetManifest back = load_manifest(path);
    CHECK(back.task == Task::partseg);
    CHECK(back.num_classes == 4);
    CHECK(back.channels == 3);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].path == "a.pgrc");
    CHECK(back.records[1].split == "test");

    // header keys are mandatory
    write_file_bytes(path, "classes=3\nchannels=3\n");
    CHECK_THROWS_AS(load_manifest(path), ValidationError);
    // malformed split
    write_file_bytes(path, "task=classification\nclasses=3\nchannels=3\na.pgrc\tvalid\n");
    CHECK_THROWS_AS(load_manifest(path), ValidationError);
}

TEST_CASE("dataset loading resolves paths and checks labels") {
    TempDir tmp;
    Rng rng = make_rng(6);
    PointCloud a = random_sample(rng, 32, 3);
    a.class_label = 0;
    PointCloud b = random_sample(rng, 32, 3);
    b.class_label = 2;
    write_sample(a, tmp.file("a.pgrc"));
    write_sample(b, tmp.file("b.pgrc"));

    DatasetManifest m;
    m.task = Task::classification;
    m.num_classes = 3;
    m.channels = 3;
    m.records = {{"a.pgrc", "train"}, {"b.pgrc", "test"}};
    save_manifest(m, tmp.file("manifest.txt"));

    LoadedDataset ds = load_dataset(tmp.file("manifest.txt"));
    CHECK(ds.train.size() == 1);
    CHECK(ds.test.size() == 1);
    CHECK(ds.test[0].class_label == 2);

    // out-of-range label fails the load
    m.num_classes = 2;
    save_manifest(m, tmp.file("manifest.txt"));
    CHECK_THROWS_AS(load_dataset(tmp.file("manifest.txt")), ValidationError);

    // missing file names the path
    m.num_classes = 3;
    m.records.push_back({"ghost.pgrc", "train"});
    save_manifest(m, tmp.file("manifest.txt"));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.file("manifest.txt")), doctest::Contains("ghost.pgrc"),
                         IoError);
}

TEST_CASE("part catalog collects the ids seen per category") {
    TempDir tmp;
    Rng rng = make_rng(7);
    auto make = [&](std::int32_t cat, std::vector<std::int32_t> parts, const std::string& name,
                    const std::string& split) {
        PointCloud pc = random_sample(rng, parts.size(), 3);
        pc.category = cat;
        pc.part_labels = std::move(parts);
        write_sample(pc, tmp.file(name));
        return ManifestRecord{name, split};
    };
    DatasetManifest m;
    m.task = Task::partseg;
    m.num_classes = 5;
    m.channels = 3;
    m.records = {make(0, {1, 0, 1, 0}, "h0.pgrc", "train"), make(1, {3, 2, 3, 2}, "l0.pgrc", "train"),
                 make(1, {4, 4, 2, 2}, "l1.pgrc", "test")};
    save_manifest(m, tmp.file("manifest.txt"));
    LoadedDataset ds = load_dataset(tmp.file("manifest.txt"));
    auto catalog = part_catalog(ds);
    REQUIRE(catalog.size() == 2);
    CHECK(catalog[0] == std::vector<std::int32_t>{0, 1});
    CHECK(catalog[1] == std::vector<std::int32_t>{2, 3, 4});
}

TEST_CASE("train config parsing") {
    TrainConfig cfg = parse_train_config(
        "# setup\n"
        "lr = 0.05\n"
        "epochs = 12\n"
        "batch = 8\n"
        "fln = 16,32,32\n"
        "precision = f64\n"
        "stop_train_acc = 0.95\n",
        "inline");
    CHECK(cfg.lr.has_value());
    CHECK(*cfg.lr == doctest::Approx(0.05));
    CHECK(cfg.epochs == 12);
    CHECK(cfg.batch == 8);
    CHECK(cfg.fln == std::vector<std::size_t>{16, 32, 32});
    REQUIRE(cfg.precision.has_value());
    CHECK(*cfg.precision == "f64");
    CHECK(cfg.stop_train_acc.has_value());

    CHECK_THROWS_WITH_AS(parse_train_config("warp = 9\n", "inline"), doctest::Contains("warp"),
                         ValidationError);
    CHECK_THROWS_AS(parse_train_config("lr = fast\n", "inline"), ValidationError);
    CHECK_THROWS_WITH_AS(load_train_config("/nonexistent/cfg.txt"),
                         doctest::Contains("/nonexistent/cfg.txt"), IoError);
}

TEST_CASE("config resolution applies task defaults and validation") {
    TrainConfig cfg;
    ResolvedTrainConfig rc = resolve_config(cfg, Task::classification);
    CHECK(rc.lr == doctest::Approx(0.1));
    CHECK(rc.lr_min == doctest::Approx(0.001));
    CHECK(rc.head == std::vector<std::size_t>{512, 256});
    CHECK(rc.precision == "f32");

    ResolvedTrainConfig rs = resolve_config(cfg, Task::sceneseg);
    CHECK(rs.lr == doctest::Approx(0.01));
    CHECK(rs.head == std::vector<std::size_t>{256, 128});

    TrainConfig bad;
    bad.lr = 0.001;
    bad.lr_min = 0.01;
    CHECK_THROWS_AS(resolve_config(bad, Task::classification), ValidationError);
    TrainConfig bad2;
    bad2.batch = 0;
    CHECK_THROWS_AS(resolve_config(bad2, Task::classification), ValidationError);
    TrainConfig bad3;
    bad3.precision = "f16";
    CHECK_THROWS_AS(resolve_config(bad3, Task::classification), ValidationError);
}

TEST_CASE("train config text round-trip") {
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.epochs = 7;
    cfg.fln = {8, 12};
    cfg.k = 11;
    TrainConfig back = parse_train_config(train_config_to_text(cfg), "roundtrip");
    CHECK(back.lr.has_value());
    CHECK(*back.lr == doctest::Approx(0.02));
    CHECK(back.epochs == 7);
    CHECK(back.fln == cfg.fln);
    CHECK(back.k == 11);
}

TEST_CASE("model config text round-trip") {
    ModelConfig mc;
    mc.task = Task::partseg;
    mc.classes = 4;
    mc.channels = 3;
    mc.categories = 2;
    mc.k = 9;
    mc.fln = {8, 12};
    mc.head = {12, 8};
    mc.label_dim = 6;
    mc.precision = "f64";
    ModelConfig back = parse_model_config(model_config_to_text(mc), "roundtrip");
    CHECK(back.task == Task::partseg);
    CHECK(back.classes == 4);
    CHECK(back.categories == 2);
    CHECK(back.k == 9);
    CHECK(back.fln == mc.fln);
    CHECK(back.head == mc.head);
    CHECK(back.label_dim == 6);
    CHECK(back.precision == "f64");

    CHECK_THROWS_AS(parse_model_config("classes = 3\n", "inline"), ValidationError);
}

TEST_CASE("checkpoints persist weights, config and velocity") {
    TempDir tmp;
    Rng rng = make_rng(8);
    Graph<float> g;
    ParamStore<float> ps(g);
    LinearLayer<float> l = register_linear(ps, "fc", 4, 3, rng);
    SgdMomentum<float> opt(ps, 0.9f);

    // one step so the velocity is non-trivial
    Tensor<float> x = random_uniform<float>(rng, {2, 4}, -1.0f, 1.0f);
    Rng wrng = make_rng(9);
    g.backward(g.weighted_sum(linear_forward(g, l, g.leaf(std::move(x))),
                              random_uniform<float>(wrng, {2, 3}, -1.0f, 1.0f)));
    opt.step(0.1f);

    ModelConfig mc;
    mc.task = Task::classification;
    mc.classes = 3;
    mc.channels = 3;
    const std::string stem = tmp.file("ckpt");
    save_checkpoint(stem, mc, ps, &opt);

    CheckpointData<float> back = load_checkpoint<float>(stem);
    CHECK(back.config.classes == 3);
    CHECK(back.weights.at("fc/w").vec() == g.value(l.w).vec());
    CHECK(back.velocity.at("fc/w").vec() == opt.velocity().at("fc/w").vec());

    // weights saved without an optimizer have no velocity entries
    save_checkpoint(stem + "_plain", mc, ps, static_cast<SgdMomentum<float>*>(nullptr));
    CheckpointData<float> plain = load_checkpoint<float>(stem + "_plain");
    CHECK(plain.velocity.empty());
    CHECK(plain.weights.size() == back.weights.size());
}
