#include "padspace/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"

namespace fs = std::filesystem;

namespace padspace {

std::string to_string(Split s) {
    return s == Split::kTrain ? "train" : "test";
}

LabelRegistry::LabelRegistry(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        ids_[labels_[i]] = static_cast<int>(i);
    }
}

int LabelRegistry::id_of(const std::string& label) const {
    const auto it = ids_.find(label);
    if (it == ids_.end()) throw DataError("unknown label '" + label + "'");
    return it->second;
}

bool LabelRegistry::contains(const std::string& label) const {
    return ids_.count(label) > 0;
}

const std::string& LabelRegistry::label_of(int id) const {
    if (id < 0 || id >= size()) throw DataError("label id out of range");
    return labels_[static_cast<std::size_t>(id)];
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);

    const fs::path base = fs::path(path).parent_path();
    Manifest out;
    std::vector<std::string> labels;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto fields = csv::split_row(line);
        if (line_no == 1) {
            if (fields != std::vector<std::string>{"path", "label", "split"}) {
                throw DataError("manifest header must be 'path,label,split': " +
                                path);
            }
            continue;
        }
        if (fields.size() != 3) {
            throw DataError("malformed row (expected 3 columns, got " +
                            std::to_string(fields.size()) + ") at line " +
                            std::to_string(line_no));
        }
        ManifestEntry e;
        e.path = fields[0];
        if (e.path.empty()) {
            throw DataError("empty path at line " + std::to_string(line_no));
        }
        const fs::path p(e.path);
        e.resolved_path = p.is_absolute() ? p.string() : (base / p).string();
        if (!fields[1].empty()) {
            e.label = fields[1];
            labels.push_back(fields[1]);
        }
        if (fields[2] == "train") {
            e.split = Split::kTrain;
        } else if (fields[2] == "test") {
            e.split = Split::kTest;
        } else {
            throw DataError("unknown split '" + fields[2] + "' at line " +
                            std::to_string(line_no));
        }
        out.entries.push_back(std::move(e));
    }
    out.registry = LabelRegistry(std::move(labels));
    return out;
}

std::string serialize_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out = "path,label,split\n";
    for (const auto& e : entries) {
        out += e.path;
        out += ',';
        if (e.label) out += *e.label;
        out += ',';
        out += to_string(e.split);
        out += '\n';
    }
    return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << serialize_manifest(entries);
}

}  // namespace padspace
