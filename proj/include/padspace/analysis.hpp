#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "padspace/corpus.hpp"
#include "padspace/dsp.hpp"
#include "padspace/predictor.hpp"
#include "padspace/reduction.hpp"

namespace padspace {

/// Recipe for one emotion's synthetic clips: a harmonic tone stack with
/// vibrato-style f0 jitter, slow amplitude modulation, and per-segment
/// timbre switches that drive spectral flux.
struct SynthSpec {
    std::string label;
    double base_f0_hz = 200.0;       // in [80, 400]
    double f0_jitter_hz = 4.0;
    double amplitude = 0.6;          // in (0, 1]
    double am_rate_hz = 2.0;
    double switch_rate_hz = 2.0;     // timbre switches per second
    double duration_s = 2.0;
    int clips = 20;

    void validate() const;
};

/// The nine-emotion recipe used throughout the docs and tests: pitch,
/// energy, and switch rate rise with arousal so the planted acoustic
/// orderings mirror the anchor geometry.
std::vector<SynthSpec> default_synth_specs(int clips_per_label);

/// Writes WAVs plus a manifest with a seeded 80/20 train/test split per
/// label. Deterministic: the same specs and seed give byte-identical
/// output.
struct GeneratedCorpus {
    std::string manifest_path;
    std::vector<ManifestEntry> entries;
};
GeneratedCorpus generate_corpus(const std::vector<SynthSpec>& specs,
                                const std::string& out_dir,
                                std::uint64_t seed);

/// Synthesizes a single clip (exposed for tests).
AudioClip synthesize_clip(const SynthSpec& spec, std::uint64_t seed,
                          int clip_index);

/// Summary statistics over per-clip means of one acoustic measure.
struct StatSummary {
    int count = 0;  // clips contributing a value
    double mean = 0, stddev = 0, min = 0, median = 0, max = 0;
};

struct GroupStats {
    std::string group;
    int clip_count = 0;
    std::optional<StatSummary> pitch;  // absent when no clip had voiced frames
    StatSummary energy;
    StatSummary flux;
};

struct EmotionStats {
    std::vector<GroupStats> groups;  // deterministic group order
};

enum class Grouping { kByLabel, kByPredictedOctant };

/// Per-group statistics of voiced pitch, RMS energy, and spectral flux,
/// aggregated over per-clip means. Octant grouping buckets clips by the
/// sign pattern of their predicted PAD (requires a predictor).
EmotionStats emotion_stats(const std::vector<ManifestEntry>& entries,
                           const FrameConfig& cfg, Grouping grouping,
                           const EdPredictor* predictor = nullptr);

/// Per-axis centroid deltas for the dominance-separated pairs, plus the
/// pleasure/arousal magnitude of Excited when present.
struct PairDelta {
    std::string first, second;
    double delta_p = 0, delta_a = 0, delta_d = 0;
    bool dominance_largest = false;
    bool dominance_positive = false;
};

struct SeparabilityReport {
    std::vector<PairDelta> pairs;
    std::optional<Pad> excited_centroid;
    double excited_pa_magnitude = 0.0;
};

/// The three label pairs the report always evaluates.
const std::vector<std::pair<std::string, std::string>>& separability_pairs();

SeparabilityReport separability_report(const EmbeddingLayout& layout);

/// One layout row per anchor label, for anchor-only reports.
EmbeddingLayout layout_from_anchors(const AnchorTable& anchors);

enum class ReportFormat { kCsv, kJson };

/// Stats CSV header: `group,metric,count,mean,std,min,median,max` with a
/// `#` schema comment; JSON carries schema_version 1. 6 significant digits.
void export_stats(const EmotionStats& stats, const std::string& path,
                  ReportFormat format);
EmotionStats import_stats(const std::string& path, ReportFormat format);

void export_separability(const SeparabilityReport& report,
                         const std::string& path, ReportFormat format);

}  // namespace padspace
