#include "pointgr/train_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pointgr/errors.hpp"

namespace pointgr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected a non-negative integer, got '" +
                              value + "'");
    }
}

std::vector<std::size_t> parse_uint_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<std::size_t>(parse_uint(key, item)));
    }
    if (out.empty()) throw ValidationError("config key '" + key + "': expected a list of integers");
    return out;
}

} // namespace

TrainConfig parse_train_config(const std::string& text, const std::string& what) {
    TrainConfig cfg;
    std::stringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(what + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "lr") cfg.lr = parse_double(key, value);
        else if (key == "lr_min") cfg.lr_min = parse_double(key, value);
        else if (key == "momentum") cfg.momentum = parse_double(key, value);
        else if (key == "batch") cfg.batch = parse_uint(key, value);
        else if (key == "epochs") cfg.epochs = parse_uint(key, value);
        else if (key == "seed") cfg.seed = parse_uint(key, value);
        else if (key == "precision") cfg.precision = value;
        else if (key == "points") cfg.points = parse_uint(key, value);
        else if (key == "k") cfg.k = static_cast<int>(parse_uint(key, value));
        else if (key == "label_smoothing") cfg.label_smoothing = parse_double(key, value);
        else if (key == "dropout") cfg.dropout = parse_double(key, value);
        else if (key == "pre_hidden") cfg.pre_hidden = parse_uint(key, value);
        else if (key == "fln") cfg.fln = parse_uint_list(key, value);
        else if (key == "aggregate") cfg.aggregate = parse_uint(key, value);
        else if (key == "head") cfg.head = parse_uint_list(key, value);
        else if (key == "label_dim") cfg.label_dim = parse_uint(key, value);
        else if (key == "stop_train_acc") cfg.stop_train_acc = parse_double(key, value);
        else if (key == "stop_train_miou") cfg.stop_train_miou = parse_double(key, value);
        else throw ValidationError(what + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str(), path);
}

ResolvedTrainConfig resolve_config(const TrainConfig& cfg, Task task) {
    ResolvedTrainConfig r;
    r.raw = cfg;
    r.lr = cfg.lr.value_or(task == Task::classification ? 0.1 : 0.01);
    r.lr_min = cfg.lr_min.value_or(r.lr / 100.0);
    r.head = cfg.head.value_or(task == Task::classification
                                   ? std::vector<std::size_t>{512, 256}
                                   : std::vector<std::size_t>{256, 128});
    if (cfg.precision) {
        r.precision = *cfg.precision;
    } else if (const char* env = std::getenv("PGR_PRECISION")) {
        r.precision = env;
    }

    if (!(r.lr > r.lr_min)) throw ValidationError("config: lr must exceed lr_min");
    if (r.lr_min < 0.0) throw ValidationError("config: lr_min must be >= 0");
    if (cfg.batch < 1) throw ValidationError("config: batch must be >= 1");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
        throw ValidationError("config: momentum must be in [0, 1)");
    }
    if (r.precision != "f32" && r.precision != "f64") {
        throw ValidationError("config: precision must be f32 or f64, got '" + r.precision + "'");
    }
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
        throw ValidationError("config: dropout must be in [0, 1)");
    }
    if (cfg.label_smoothing < 0.0 || cfg.label_smoothing >= 1.0) {
        throw ValidationError("config: label_smoothing must be in [0, 1)");
    }
    if (cfg.k < 1) throw ValidationError("config: k must be >= 1");
    if (cfg.fln.empty()) throw ValidationError("config: fln needs at least one stage");
    return r;
}

std::string train_config_to_text(const TrainConfig& cfg) {
    std::stringstream out;
    auto list = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(v[i]);
        }
        return s;
    };
    if (cfg.lr) out << "lr = " << *cfg.lr << "\n";
    if (cfg.lr_min) out << "lr_min = " << *cfg.lr_min << "\n";
    out << "momentum = " << cfg.momentum << "\n";
    out << "batch = " << cfg.batch << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "seed = " << cfg.seed << "\n";
    if (cfg.precision) out << "precision = " << *cfg.precision << "\n";
    out << "points = " << cfg.points << "\n";
    out << "k = " << cfg.k << "\n";
    out << "label_smoothing = " << cfg.label_smoothing << "\n";
    out << "dropout = " << cfg.dropout << "\n";
    out << "pre_hidden = " << cfg.pre_hidden << "\n";
    out << "fln = " << list(cfg.fln) << "\n";
    out << "aggregate = " << cfg.aggregate << "\n";
    if (cfg.head) out << "head = " << list(*cfg.head) << "\n";
    out << "label_dim = " << cfg.label_dim << "\n";
    if (cfg.stop_train_acc) out << "stop_train_acc = " << *cfg.stop_train_acc << "\n";
    if (cfg.stop_train_miou) out << "stop_train_miou = " << *cfg.stop_train_miou << "\n";
    return out.str();
}

} // namespace pointgr
