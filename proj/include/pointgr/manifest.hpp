#pragma once

#include <string>
#include <vector>

#include "pointgr/point_cloud.hpp"

namespace pointgr {

enum class Task { classification, partseg, sceneseg };

std::string task_name(Task t);
Task parse_task(const std::string& name);

struct ManifestRecord {
    std::string path;  // as written in the file; may be relative to it
    std::string split; // "train" or "test"
};

/// Text index of a dataset: a `key=value` header (task, classes, channels)
/// followed by one `path<TAB>split` line per sample.
struct DatasetManifest {
    Task task = Task::classification;
    std::size_t num_classes = 0;
    std::size_t channels = 0;
    std::vector<ManifestRecord> records;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

/// Manifest plus every sample pulled into memory, with labels checked
/// against the header. Relative record paths resolve against the manifest's
/// directory.
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<PointCloud> train;
    std::vector<PointCloud> test;
};

LoadedDataset load_dataset(const std::string& manifest_path);

/// Global part ids seen per category across the whole dataset, sorted.
/// Category count is one past the largest category id.
std::vector<std::vector<std::int32_t>> part_catalog(const LoadedDataset& ds);

} // namespace pointgr
