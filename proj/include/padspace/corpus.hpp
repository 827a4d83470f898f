#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace padspace {

enum class Split { kTrain, kTest };

std::string to_string(Split s);

/// One manifest row. `path` is the raw field as written; `resolved_path`
/// is usable for opening the file (relative paths resolve against the
/// manifest's directory).
struct ManifestEntry {
    std::string path;
    std::string resolved_path;
    std::optional<std::string> label;  // absent = unlabeled, prediction only
    Split split = Split::kTrain;
};

/// Distinct emotion labels with stable integer ids 0..C-1, ordered
/// lexicographically.
class LabelRegistry {
public:
    LabelRegistry() = default;
    explicit LabelRegistry(std::vector<std::string> labels);

    int id_of(const std::string& label) const;  // throws DataError if unknown
    bool contains(const std::string& label) const;
    const std::string& label_of(int id) const;
    const std::vector<std::string>& labels() const { return labels_; }
    int size() const { return static_cast<int>(labels_.size()); }

private:
    std::vector<std::string> labels_;
    std::map<std::string, int> ids_;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    LabelRegistry registry;
};

/// Parses a `path,label,split` CSV manifest. Row order is preserved; the
/// registry holds the distinct non-empty labels. Errors name the offending
/// line number.
Manifest load_manifest(const std::string& path);

/// Re-serializes entries in the manifest format. load_manifest of the
/// result round-trips byte-identically modulo a trailing newline.
std::string serialize_manifest(const std::vector<ManifestEntry>& entries);

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

}  // namespace padspace
