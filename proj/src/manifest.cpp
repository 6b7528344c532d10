#include "pointgr/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pointgr/errors.hpp"

namespace pointgr {

std::string task_name(Task t) {
    switch (t) {
        case Task::classification: return "classification";
        case Task::partseg: return "partseg";
        case Task::sceneseg: return "sceneseg";
    }
    throw ValidationError("unknown task enum value");
}

Task parse_task(const std::string& name) {
    if (name == "classification") return Task::classification;
    if (name == "partseg") return Task::partseg;
    if (name == "sceneseg") return Task::sceneseg;
    throw ValidationError("unknown task '" + name +
                          "' (expected classification, partseg, or sceneseg)");
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "task=" << task_name(m.task) << "\n";
    out << "classes=" << m.num_classes << "\n";
    out << "channels=" << m.channels << "\n";
    for (const ManifestRecord& r : m.records) {
        if (r.split != "train" && r.split != "test") {
            throw ValidationError("manifest split must be train or test, got '" + r.split + "'");
        }
        out << r.path << "\t" << r.split << "\n";
    }
    if (!out) throw IoError("short write to " + path);
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    DatasetManifest m;
    bool saw_task = false, saw_classes = false, saw_channels = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": expected key=value or path<TAB>split");
            }
            std::string key = line.substr(0, eq), value = line.substr(eq + 1);
            if (key == "task") {
                m.task = parse_task(value);
                saw_task = true;
            } else if (key == "classes") {
                m.num_classes = std::stoul(value);
                saw_classes = true;
            } else if (key == "channels") {
                m.channels = std::stoul(value);
                saw_channels = true;
            } else {
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": unknown header key '" + key + "'");
            }
        } else {
            ManifestRecord r;
            r.path = line.substr(0, tab);
            r.split = line.substr(tab + 1);
            if (r.split != "train" && r.split != "test") {
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": split must be train or test, got '" + r.split + "'");
            }
            m.records.push_back(std::move(r));
        }
    }
    if (!saw_task || !saw_classes || !saw_channels) {
        throw ValidationError(path + ": header must declare task, classes, and channels");
    }
    if (m.num_classes == 0) throw ValidationError(path + ": classes must be positive");
    return m;
}

LoadedDataset load_dataset(const std::string& manifest_path) {
    LoadedDataset ds;
    ds.manifest = load_manifest(manifest_path);
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    for (const ManifestRecord& r : ds.manifest.records) {
        std::filesystem::path p(r.path);
        if (p.is_relative()) p = base / p;
        PointCloud pc = read_sample(p.string());
        if (pc.channels() != ds.manifest.channels) {
            throw ValidationError(p.string() + ": has " + std::to_string(pc.channels()) +
                                  " channels, manifest declares " +
                                  std::to_string(ds.manifest.channels));
        }
        const std::size_t m = ds.manifest.num_classes;
        switch (ds.manifest.task) {
            case Task::classification:
                if (pc.class_label < 0) throw ValidationError(p.string() + ": missing class label");
                if (static_cast<std::size_t>(pc.class_label) >= m) {
                    throw ValidationError(p.string() + ": class label >= " + std::to_string(m));
                }
                break;
            case Task::partseg:
                if (pc.part_labels.empty()) throw ValidationError(p.string() + ": missing part labels");
                if (pc.category < 0) throw ValidationError(p.string() + ": missing category");
                for (std::int32_t label : pc.part_labels) {
                    if (static_cast<std::size_t>(label) >= m) {
                        throw ValidationError(p.string() + ": part label >= " + std::to_string(m));
                    }
                }
                break;
            case Task::sceneseg:
                if (pc.part_labels.empty()) {
                    throw ValidationError(p.string() + ": missing per-point labels");
                }
                for (std::int32_t label : pc.part_labels) {
                    if (static_cast<std::size_t>(label) >= m) {
                        throw ValidationError(p.string() + ": point label >= " + std::to_string(m));
                    }
                }
                break;
        }
        (r.split == "train" ? ds.train : ds.test).push_back(std::move(pc));
    }
    return ds;
}

std::vector<std::vector<std::int32_t>> part_catalog(const LoadedDataset& ds) {
    std::int32_t max_cat = -1;
    for (const auto* split : {&ds.train, &ds.test}) {
        for (const PointCloud& pc : *split) max_cat = std::max(max_cat, pc.category);
    }
    std::vector<std::set<std::int32_t>> seen(static_cast<std::size_t>(max_cat + 1));
    for (const auto* split : {&ds.train, &ds.test}) {
        for (const PointCloud& pc : *split) {
            if (pc.category < 0) continue;
            for (std::int32_t label : pc.part_labels) {
                seen[static_cast<std::size_t>(pc.category)].insert(label);
            }
        }
    }
    std::vector<std::vector<std::int32_t>> catalog;
    catalog.reserve(seen.size());
    for (const auto& s : seen) catalog.emplace_back(s.begin(), s.end());
    return catalog;
}

} // namespace pointgr
