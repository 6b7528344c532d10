#include "pointgr/checkpoint.hpp"

#include <sstream>

namespace pointgr {

namespace {

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::size_t> split_list(const std::string& value, const std::string& key,
                                    const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stoul(item));
        } catch (const std::exception&) {
            throw ValidationError(what + ": bad integer in '" + key + "'");
        }
    }
    if (out.empty()) throw ValidationError(what + ": empty list for '" + key + "'");
    return out;
}

} // namespace

std::string model_config_to_text(const ModelConfig& mc) {
    std::ostringstream out;
    out << "task = " << task_name(mc.task) << "\n";
    out << "classes = " << mc.classes << "\n";
    out << "channels = " << mc.channels << "\n";
    if (mc.task == Task::partseg) {
        out << "categories = " << mc.categories << "\n";
        out << "label_dim = " << mc.label_dim << "\n";
    }
    out << "k = " << mc.k << "\n";
    out << "pre_hidden = " << mc.pre_hidden << "\n";
    out << "fln = " << join(mc.fln) << "\n";
    out << "aggregate = " << mc.aggregate << "\n";
    out << "head = " << join(mc.head) << "\n";
    out << "dropout = " << mc.dropout << "\n";
    out << "precision = " << mc.precision << "\n";
    return out.str();
}

ModelConfig parse_model_config(const std::string& text, const std::string& what) {
    ModelConfig mc;
    bool saw_task = false, saw_classes = false;
    std::stringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(what + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "task") {
                mc.task = parse_task(value);
                saw_task = true;
            } else if (key == "classes") {
                mc.classes = std::stoul(value);
                saw_classes = true;
            } else if (key == "channels") mc.channels = std::stoul(value);
            else if (key == "categories") mc.categories = std::stoul(value);
            else if (key == "label_dim") mc.label_dim = std::stoul(value);
            else if (key == "k") mc.k = std::stoi(value);
            else if (key == "pre_hidden") mc.pre_hidden = std::stoul(value);
            else if (key == "fln") mc.fln = split_list(value, key, what);
            else if (key == "aggregate") mc.aggregate = std::stoul(value);
            else if (key == "head") mc.head = split_list(value, key, what);
            else if (key == "dropout") mc.dropout = std::stod(value);
            else if (key == "precision") mc.precision = value;
            else throw ValidationError(what + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(what + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
    }
    if (!saw_task || !saw_classes) {
        throw ValidationError(what + ": model config must declare task and classes");
    }
    if (mc.classes == 0) throw ValidationError(what + ": classes must be positive");
    if (mc.task == Task::partseg && mc.categories == 0) {
        throw ValidationError(what + ": part segmentation config needs categories");
    }
    if (mc.precision != "f32" && mc.precision != "f64") {
        throw ValidationError(what + ": precision must be f32 or f64");
    }
    return mc;
}

ModelConfig load_model_config(const std::string& path) {
    return parse_model_config(read_file_bytes(path), path);
}

ClassifierSpec to_classifier_spec(const ModelConfig& mc) {
    ClassifierSpec s;
    s.in_channels = mc.channels;
    s.num_classes = mc.classes;
    s.k = mc.k;
    s.pre_hidden = mc.pre_hidden;
    s.fln = mc.fln;
    s.aggregate = mc.aggregate;
    s.head = mc.head;
    s.dropout = mc.dropout;
    return s;
}

PartSegSpec to_part_seg_spec(const ModelConfig& mc) {
    PartSegSpec s;
    s.in_channels = mc.channels;
    s.num_parts = mc.classes;
    s.num_categories = mc.categories;
    s.k = mc.k;
    s.pre_hidden = mc.pre_hidden;
    s.fln = mc.fln;
    s.aggregate = mc.aggregate;
    s.label_dim = mc.label_dim;
    s.head = mc.head;
    s.dropout = mc.dropout;
    return s;
}

SceneSegSpec to_scene_seg_spec(const ModelConfig& mc) {
    SceneSegSpec s;
    s.in_channels = mc.channels;
    s.num_classes = mc.classes;
    s.k = mc.k;
    s.pre_hidden = mc.pre_hidden;
    s.fln = mc.fln;
    s.aggregate = mc.aggregate;
    s.head = mc.head;
    s.dropout = mc.dropout;
    return s;
}

} // namespace pointgr
