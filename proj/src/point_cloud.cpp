#include "pointgr/point_cloud.hpp"

#include <bit>
#include <cmath>

#include "pointgr/weights_io.hpp"

namespace pointgr {

namespace {
constexpr std::uint8_t kHasClassLabel = 1;
constexpr std::uint8_t kHasPartLabels = 2;
constexpr std::uint8_t kHasCategory = 4;
} // namespace

void validate_point_cloud(const PointCloud& pc) {
    if (pc.points.rank() != 2) {
        throw ValidationError("point cloud: points must be [N, C], got " +
                              shape_str(pc.points.shape()));
    }
    const std::size_t n = pc.points.dim(0), c = pc.points.dim(1);
    if (n < 1) throw ValidationError("point cloud: N must be >= 1");
    if (c < 3) throw ValidationError("point cloud: C must be >= 3");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < 3; ++d) {
            if (!std::isfinite(pc.points[i * c + d])) {
                throw ValidationError("point cloud: non-finite coordinate at point " +
                                      std::to_string(i));
            }
        }
    }
    if (!pc.part_labels.empty() && pc.part_labels.size() != n) {
        throw ValidationError("point cloud: " + std::to_string(pc.part_labels.size()) +
                              " part labels for " + std::to_string(n) + " points");
    }
}

void write_sample(const PointCloud& pc, const std::string& path) {
    validate_point_cloud(pc);
    const std::size_t n = pc.points.dim(0), c = pc.points.dim(1);
    if (pc.class_label > 0xffff || pc.category > 0xffff || c > 0xffff) {
        throw ValidationError("write_sample: field exceeds u16 range");
    }
    std::uint8_t flags = 0;
    if (pc.class_label >= 0) flags |= kHasClassLabel;
    if (!pc.part_labels.empty()) flags |= kHasPartLabels;
    if (pc.category >= 0) flags |= kHasCategory;

    std::string buf;
    buf += "PGRC";
    wire::put_u16(buf, 1);
    buf.push_back(static_cast<char>(flags));
    wire::put_u32(buf, static_cast<std::uint32_t>(n));
    wire::put_u16(buf, static_cast<std::uint16_t>(c));
    if (flags & kHasClassLabel) wire::put_u16(buf, static_cast<std::uint16_t>(pc.class_label));
    if (flags & kHasCategory) wire::put_u16(buf, static_cast<std::uint16_t>(pc.category));
    for (std::size_t i = 0; i < n * c; ++i) {
        wire::put_u32(buf, std::bit_cast<std::uint32_t>(pc.points[i]));
    }
    if (flags & kHasPartLabels) {
        for (std::int32_t label : pc.part_labels) {
            if (label < 0 || label > 0xffff) {
                throw ValidationError("write_sample: part label out of u16 range");
            }
            wire::put_u16(buf, static_cast<std::uint16_t>(label));
        }
    }
    write_file_bytes(path, buf);
}

PointCloud read_sample(const std::string& path) {
    std::string buf = read_file_bytes(path);
    wire::Reader r(buf, path);
    if (r.bytes(4) != "PGRC") throw IoError(path + ": not a point cloud sample");
    std::uint16_t version = r.u16();
    if (version != 1) throw IoError(path + ": unsupported version " + std::to_string(version));
    std::uint8_t flags = r.u8();
    if (flags & ~(kHasClassLabel | kHasPartLabels | kHasCategory)) {
        throw IoError(path + ": unknown flag bits");
    }
    std::uint32_t n = r.u32();
    std::uint16_t c = r.u16();

    PointCloud pc;
    if (flags & kHasClassLabel) pc.class_label = r.u16();
    if (flags & kHasCategory) pc.category = r.u16();
    pc.points = Tensor<float>({n, c});
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(r.take(pc.points.numel() * 4));
    for (std::size_t i = 0; i < pc.points.numel(); ++i, p += 4) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
        pc.points[i] = std::bit_cast<float>(v);
    }
    if (flags & kHasPartLabels) {
        pc.part_labels.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) pc.part_labels[i] = r.u16();
    }
    if (!r.at_end()) throw IoError(path + ": trailing bytes after payload");
    validate_point_cloud(pc);
    return pc;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng) {
    if (population == 0) throw ValidationError("sample_indices: empty population");
    if (n == 0) throw ValidationError("sample_indices: n must be >= 1");
    std::vector<std::size_t> out;
    out.reserve(n);
    if (n <= population) {
        // partial Fisher-Yates: the first n slots of a uniform shuffle
        std::vector<std::size_t> pool(population);
        for (std::size_t i = 0; i < population; ++i) pool[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, population - 1);
            std::swap(pool[i], pool[pick(rng)]);
            out.push_back(pool[i]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, population - 1);
        for (std::size_t i = 0; i < n; ++i) out.push_back(pick(rng));
    }
    return out;
}

PointCloud uniform_sample(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
    validate_point_cloud(pc);
    Rng rng = make_rng(seed);
    const std::size_t c = pc.channels();
    std::vector<std::size_t> idx = sample_indices(pc.size(), n, rng);

    PointCloud out;
    out.class_label = pc.class_label;
    out.category = pc.category;
    out.points = Tensor<float>({n, c});
    for (std::size_t i = 0; i < n; ++i) {
        const float* src = pc.points.data() + idx[i] * c;
        std::copy_n(src, c, out.points.data() + i * c);
    }
    if (!pc.part_labels.empty()) {
        out.part_labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.part_labels[i] = pc.part_labels[idx[i]];
    }
    return out;
}

} // namespace pointgr
