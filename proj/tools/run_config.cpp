#include "run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"

namespace padspace {

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(line_no) +
                            " is not key=value: '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const std::string ctx = "config key '" + key + "'";

        if (key == "seed") {
            seed = static_cast<std::uint64_t>(csv::parse_long(value, ctx));
        } else if (key == "manifest") {
            manifest = value;
        } else if (key == "workdir") {
            workdir = value;
        } else if (key == "epochs") {
            epochs = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "batch_size") {
            batch_size = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "learning_rate") {
            learning_rate = csv::parse_double(value, ctx);
        } else if (key == "k") {
            k = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "min_dist") {
            min_dist = csv::parse_double(value, ctx);
        } else if (key == "layout_lr") {
            layout_lr = csv::parse_double(value, ctx);
        } else if (key == "anchor_noise_sigma") {
            anchor_noise_sigma = csv::parse_double(value, ctx);
        } else if (key == "layout_epochs") {
            layout_epochs = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "negative_sample_rate") {
            negative_sample_rate = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "supervision_weight") {
            supervision_weight = csv::parse_double(value, ctx);
        } else if (key == "anchor_pull") {
            anchor_pull = csv::parse_double(value, ctx);
        } else if (key == "k_pred") {
            k_pred = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "frame_len") {
            frame_len = static_cast<int>(csv::parse_long(value, ctx));
        } else if (key == "hop") {
            hop = static_cast<int>(csv::parse_long(value, ctx));
        } else {
            throw DataError("unknown config key '" + key + "' at line " +
                            std::to_string(line_no));
        }
    }
}

std::string RunConfig::effective_workdir() const {
    if (!workdir.empty()) return workdir;
    if (const char* env = std::getenv("PADSPACE_WORKDIR")) {
        if (*env) return env;
    }
    return ".";
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    return cfg;
}

ReductionConfig RunConfig::reduction_config() const {
    ReductionConfig cfg;
    cfg.k = k;
    cfg.min_dist = min_dist;
    cfg.layout_lr = layout_lr;
    cfg.anchor_noise_sigma = anchor_noise_sigma;
    cfg.epochs = layout_epochs;
    cfg.negative_sample_rate = negative_sample_rate;
    cfg.supervision_weight = supervision_weight;
    cfg.anchor_pull = anchor_pull;
    cfg.seed = seed;
    return cfg;
}

FrameConfig RunConfig::frame_config() const {
    FrameConfig cfg;
    cfg.frame_len = frame_len;
    cfg.hop = hop;
    return cfg;
}

}  // namespace padspace
