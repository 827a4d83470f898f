#include "padspace/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"
#include "padspace/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace padspace {

namespace {

constexpr int kMaxHarmonics = 5;
constexpr double kVibratoRateHz = 5.0;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

StatSummary summarize(std::vector<double> values) {
    StatSummary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    // canonical order first, so statistics are bit-identical under any
    // permutation of the input clips
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (const double v : values) acc += v;
    s.mean = acc / s.count;
    double var = 0.0;
    for (const double v : values) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / s.count);
    s.min = values.front();
    s.max = values.back();
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1
                   ? values[mid]
                   : 0.5 * (values[mid - 1] + values[mid]);
    return s;
}

std::string octant_name(const PadVector& pad) {
    auto sign = [](double v) { return v >= 0.0 ? '+' : '-'; };
    std::string name = "P";
    name += sign(pad.pleasure);
    name += 'A';
    name += sign(pad.arousal);
    name += 'D';
    name += sign(pad.dominance);
    return name;
}

json summary_to_json(const StatSummary& s) {
    return {{"count", s.count},   {"mean", s.mean}, {"std", s.stddev},
            {"min", s.min},       {"median", s.median}, {"max", s.max}};
}

StatSummary summary_from_json(const json& j) {
    StatSummary s;
    s.count = j.at("count").get<int>();
    s.mean = j.at("mean").get<double>();
    s.stddev = j.at("std").get<double>();
    s.min = j.at("min").get<double>();
    s.median = j.at("median").get<double>();
    s.max = j.at("max").get<double>();
    return s;
}

}  // namespace

void SynthSpec::validate() const {
    if (label.empty()) throw DataError("synth spec needs a label");
    if (base_f0_hz < 80.0 || base_f0_hz > 400.0) {
        throw DataError("base f0 must be in [80, 400] Hz for '" + label + "'");
    }
    if (amplitude <= 0.0 || amplitude > 1.0) {
        throw DataError("amplitude must be in (0, 1] for '" + label + "'");
    }
    if (f0_jitter_hz < 0 || am_rate_hz < 0 || switch_rate_hz < 0) {
        throw DataError("rates must be nonnegative for '" + label + "'");
    }
    if (duration_s <= 0) throw DataError("duration must be positive");
    if (clips < 0) throw DataError("clip count must be >= 0");
}

std::vector<SynthSpec> default_synth_specs(int clips_per_label) {
    // Pitch, loudness, and switch rate rise with arousal; calm emotions get
    // slow steady tones. Orderings, not absolute values, are the point.
    std::vector<SynthSpec> specs = {
        {"Neutral", 165, 2, 0.45, 1.0, 1.0, 2.0, clips_per_label},
        {"Angry", 205, 6, 0.80, 3.0, 3.0, 2.0, clips_per_label},
        {"Happy", 255, 5, 0.65, 2.5, 4.0, 2.0, clips_per_label},
        {"Sad", 120, 2, 0.30, 0.8, 0.5, 2.0, clips_per_label},
        {"Surprise", 300, 8, 0.70, 4.0, 6.0, 2.0, clips_per_label},
        {"Anxious", 230, 7, 0.50, 5.0, 5.0, 2.0, clips_per_label},
        {"Alert", 270, 4, 0.70, 3.0, 4.5, 2.0, clips_per_label},
        {"Relaxed", 140, 1.5, 0.40, 0.7, 0.8, 2.0, clips_per_label},
        {"Protected", 130, 2, 0.35, 1.0, 1.2, 2.0, clips_per_label},
    };
    return specs;
}

AudioClip synthesize_clip(const SynthSpec& spec, std::uint64_t seed,
                          int clip_index) {
    spec.validate();
    Rng rng(seed ^ fnv1a(spec.label),
            static_cast<std::uint64_t>(clip_index) + 17);

    const int rate = kCanonicalRate;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * rate));

    const double vibrato_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    const int n_segments = std::max(
        1, static_cast<int>(std::ceil(spec.duration_s * spec.switch_rate_hz)));
    std::vector<std::array<double, kMaxHarmonics>> segment_amps(
        static_cast<std::size_t>(n_segments));
    for (auto& amps : segment_amps) {
        amps[0] = 1.0;  // fundamental dominates so pitch tracking stays clean
        for (int h = 1; h < kMaxHarmonics; ++h) {
            amps[static_cast<std::size_t>(h)] =
                rng.uniform(0.1, 0.5) / (h + 1);
        }
    }

    AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.resize(n);
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double f0 =
            spec.base_f0_hz +
            spec.f0_jitter_hz *
                std::sin(2.0 * std::numbers::pi * kVibratoRateHz * t +
                         vibrato_phase);
        int seg = static_cast<int>(t * spec.switch_rate_hz);
        seg = std::min(seg, n_segments - 1);
        const auto& amps = segment_amps[static_cast<std::size_t>(seg)];

        double tone = 0.0;
        double norm = 0.0;
        for (int h = 0; h < kMaxHarmonics; ++h) {
            const double hf = f0 * (h + 1);
            if (hf >= 0.45 * rate) break;
            tone += amps[static_cast<std::size_t>(h)] *
                    std::sin((h + 1) * phase);
            norm += amps[static_cast<std::size_t>(h)];
        }
        const double env =
            spec.amplitude *
            (0.7 + 0.3 * std::sin(2.0 * std::numbers::pi * spec.am_rate_hz * t +
                                  am_phase));
        clip.samples[i] = env * tone / norm;
        phase += 2.0 * std::numbers::pi * f0 / rate;
    }
    return clip;
}

GeneratedCorpus generate_corpus(const std::vector<SynthSpec>& specs,
                                const std::string& out_dir,
                                std::uint64_t seed) {
    for (const auto& spec : specs) spec.validate();
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "wav", ec);
    if (ec) throw DataError("cannot create corpus directory: " + out_dir);

    GeneratedCorpus corpus;
    Rng split_rng(seed, RngStream::kCorpusSplit);
    for (const auto& spec : specs) {
        if (spec.clips == 0) continue;  // label absent from the manifest

        std::vector<int> order(static_cast<std::size_t>(spec.clips));
        for (int i = 0; i < spec.clips; ++i) order[static_cast<std::size_t>(i)] = i;
        split_rng.shuffle(order);
        const int n_test = static_cast<int>(std::llround(0.2 * spec.clips));
        std::vector<bool> is_test(static_cast<std::size_t>(spec.clips), false);
        for (int i = 0; i < n_test; ++i) {
            is_test[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
                true;
        }

        for (int c = 0; c < spec.clips; ++c) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%04d.wav",
                          spec.label.c_str(), c);
            const std::string rel = std::string("wav/") + name;
            const std::string abs_path =
                (fs::path(out_dir) / "wav" / name).string();
            write_wav(abs_path, synthesize_clip(spec, seed, c));
            ManifestEntry e;
            e.path = rel;
            e.resolved_path = abs_path;
            e.label = spec.label;
            e.split = is_test[static_cast<std::size_t>(c)] ? Split::kTest
                                                           : Split::kTrain;
            corpus.entries.push_back(std::move(e));
        }
    }
    corpus.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    write_manifest(corpus.manifest_path, corpus.entries);
    return corpus;
}

EmotionStats emotion_stats(const std::vector<ManifestEntry>& entries,
                           const FrameConfig& cfg, Grouping grouping,
                           const EdPredictor* predictor) {
    if (entries.empty()) throw DataError("no clips in group");
    if (grouping == Grouping::kByPredictedOctant && predictor == nullptr) {
        throw DataError("octant grouping needs a predictor bundle");
    }

    struct Accum {
        int clips = 0;
        std::vector<double> pitch, energy, flux;
    };
    std::map<std::string, Accum> groups;

    for (const auto& entry : entries) {
        std::string group;
        AudioClip clip = read_wav(entry.resolved_path);
        if (clip.sample_rate != kCanonicalRate) {
            clip = resample(clip, kCanonicalRate);
        }
        if (grouping == Grouping::kByLabel) {
            if (!entry.label) continue;  // unlabeled clips have no group
            group = *entry.label;
        } else {
            group = octant_name(predict_ed(*predictor, clip));
        }

        const std::vector<double> energy = rms_energy(clip, cfg);
        const std::vector<double> flux = spectral_flux(stft_magnitude(clip, cfg));
        const PitchTrack pitch = pitch_yin(clip, cfg);
        const std::vector<double> voiced = pitch.voiced_values();

        auto& acc = groups[group];
        acc.clips += 1;
        double e = 0.0;
        for (const double v : energy) e += v;
        acc.energy.push_back(e / static_cast<double>(energy.size()));
        double f = 0.0;
        for (const double v : flux) f += v;
        acc.flux.push_back(f / static_cast<double>(flux.size()));
        if (!voiced.empty()) {
            double p = 0.0;
            for (const double v : voiced) p += v;
            acc.pitch.push_back(p / static_cast<double>(voiced.size()));
        }
    }
    if (groups.empty()) throw DataError("no clips in group");

    EmotionStats stats;
    for (auto& [name, acc] : groups) {
        GroupStats g;
        g.group = name;
        g.clip_count = acc.clips;
        if (!acc.pitch.empty()) g.pitch = summarize(std::move(acc.pitch));
        g.energy = summarize(std::move(acc.energy));
        g.flux = summarize(std::move(acc.flux));
        stats.groups.push_back(std::move(g));
    }
    return stats;
}

const std::vector<std::pair<std::string, std::string>>& separability_pairs() {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"Angry", "Anxious"},
        {"Alert", "Surprise"},
        {"Relaxed", "Protected"},
    };
    return pairs;
}

SeparabilityReport separability_report(const EmbeddingLayout& layout) {
    SeparabilityReport report;
    for (const auto& [first, second] : separability_pairs()) {
        const Pad a = layout.centroid(first);   // throws on missing label
        const Pad b = layout.centroid(second);
        PairDelta d;
        d.first = first;
        d.second = second;
        d.delta_p = a(0) - b(0);
        d.delta_a = a(1) - b(1);
        d.delta_d = a(2) - b(2);
        d.dominance_largest = std::abs(d.delta_d) > std::abs(d.delta_p) &&
                              std::abs(d.delta_d) > std::abs(d.delta_a);
        d.dominance_positive = d.delta_d > 0.0;
        report.pairs.push_back(std::move(d));
    }
    const bool has_excited =
        std::find(layout.labels.begin(), layout.labels.end(), "Excited") !=
        layout.labels.end();
    if (has_excited) {
        const Pad c = layout.centroid("Excited");
        report.excited_centroid = c;
        report.excited_pa_magnitude = std::hypot(c(0), c(1));
    }
    return report;
}

EmbeddingLayout layout_from_anchors(const AnchorTable& anchors) {
    EmbeddingLayout layout;
    layout.coords.resize(
        static_cast<Eigen::Index>(anchors.entries().size()), 3);
    Eigen::Index r = 0;
    for (const auto& [label, pad] : anchors.entries()) {
        layout.clip_ids.push_back(label);
        layout.labels.push_back(label);
        layout.coords.row(r++) = pad.transpose();
    }
    return layout;
}

void export_stats(const EmotionStats& stats, const std::string& path,
                  ReportFormat format) {
    if (format == ReportFormat::kCsv) {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write report: " + path);
        out << "# emotion statistics over per-clip means; pitch counts only "
               "clips with voiced frames\n";
        out << "group,metric,count,mean,std,min,median,max\n";
        auto row = [&](const std::string& group, const char* metric,
                       const StatSummary* s) {
            out << group << ',' << metric << ',';
            if (s == nullptr || s->count == 0) {
                out << "0,,,,,\n";
                return;
            }
            out << s->count << ',' << csv::format_g6(s->mean) << ','
                << csv::format_g6(s->stddev) << ',' << csv::format_g6(s->min)
                << ',' << csv::format_g6(s->median) << ','
                << csv::format_g6(s->max) << '\n';
        };
        for (const auto& g : stats.groups) {
            row(g.group, "pitch", g.pitch ? &*g.pitch : nullptr);
            row(g.group, "energy", &g.energy);
            row(g.group, "flux", &g.flux);
        }
        if (!out) throw DataError("failed writing report: " + path);
        return;
    }

    json doc;
    doc["schema_version"] = 1;
    doc["groups"] = json::array();
    for (const auto& g : stats.groups) {
        json jg;
        jg["group"] = g.group;
        jg["clip_count"] = g.clip_count;
        jg["pitch"] = g.pitch ? summary_to_json(*g.pitch) : json(nullptr);
        jg["energy"] = summary_to_json(g.energy);
        jg["flux"] = summary_to_json(g.flux);
        doc["groups"].push_back(std::move(jg));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << doc.dump(2) << '\n';
}

EmotionStats import_stats(const std::string& path, ReportFormat format) {
    EmotionStats stats;
    if (format == ReportFormat::kCsv) {
        const auto rows = csv::read_file(path);
        if (rows.empty() ||
            rows[0] != csv::split_row("group,metric,count,mean,std,min,median,max")) {
            throw DataError("bad stats CSV header: " + path);
        }
        std::map<std::string, GroupStats> groups;
        std::vector<std::string> order;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != 8) {
                throw DataError("bad stats row " + std::to_string(r + 1));
            }
            const std::string& group = rows[r][0];
            if (!groups.count(group)) order.push_back(group);
            auto& g = groups[group];
            g.group = group;
            StatSummary s;
            s.count = static_cast<int>(csv::parse_long(rows[r][2], "count"));
            if (s.count > 0) {
                s.mean = csv::parse_double(rows[r][3], "mean");
                s.stddev = csv::parse_double(rows[r][4], "std");
                s.min = csv::parse_double(rows[r][5], "min");
                s.median = csv::parse_double(rows[r][6], "median");
                s.max = csv::parse_double(rows[r][7], "max");
            }
            const std::string& metric = rows[r][1];
            if (metric == "pitch") {
                if (s.count > 0) g.pitch = s;
            } else if (metric == "energy") {
                g.energy = s;
                g.clip_count = s.count;
            } else if (metric == "flux") {
                g.flux = s;
            } else {
                throw DataError("unknown metric '" + metric + "' in " + path);
            }
        }
        for (const auto& name : order) stats.groups.push_back(groups[name]);
        return stats;
    }

    std::ifstream in(path);
    if (!in) throw DataError("cannot open report: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("report parse error: " + std::string(e.what()));
    }
    if (doc.value("schema_version", 0) != 1) {
        throw DataError("report: unsupported schema_version");
    }
    for (const auto& jg : doc.at("groups")) {
        GroupStats g;
        g.group = jg.at("group").get<std::string>();
        g.clip_count = jg.at("clip_count").get<int>();
        if (!jg.at("pitch").is_null()) g.pitch = summary_from_json(jg.at("pitch"));
        g.energy = summary_from_json(jg.at("energy"));
        g.flux = summary_from_json(jg.at("flux"));
        stats.groups.push_back(std::move(g));
    }
    return stats;
}

void export_separability(const SeparabilityReport& report,
                         const std::string& path, ReportFormat format) {
    if (format == ReportFormat::kCsv) {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write report: " + path);
        out << "# centroid deltas (first minus second) per axis\n";
        out << "pair,delta_p,delta_a,delta_d,dominance_largest,dominance_"
               "positive\n";
        for (const auto& p : report.pairs) {
            out << p.first << '-' << p.second << ','
                << csv::format_g6(p.delta_p) << ',' << csv::format_g6(p.delta_a)
                << ',' << csv::format_g6(p.delta_d) << ','
                << (p.dominance_largest ? "true" : "false") << ','
                << (p.dominance_positive ? "true" : "false") << '\n';
        }
        if (report.excited_centroid) {
            out << "# excited_centroid,"
                << csv::format_g6((*report.excited_centroid)(0)) << ','
                << csv::format_g6((*report.excited_centroid)(1)) << ",pa_mag="
                << csv::format_g6(report.excited_pa_magnitude) << '\n';
        }
        return;
    }

    json doc;
    doc["schema_version"] = 1;
    doc["pairs"] = json::array();
    for (const auto& p : report.pairs) {
        doc["pairs"].push_back({{"first", p.first},
                                {"second", p.second},
                                {"delta_p", p.delta_p},
                                {"delta_a", p.delta_a},
                                {"delta_d", p.delta_d},
                                {"dominance_largest", p.dominance_largest},
                                {"dominance_positive", p.dominance_positive}});
    }
    if (report.excited_centroid) {
        doc["excited"] = {{"pleasure", (*report.excited_centroid)(0)},
                          {"arousal", (*report.excited_centroid)(1)},
                          {"pa_magnitude", report.excited_pa_magnitude}};
    } else {
        doc["excited"] = nullptr;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << doc.dump(2) << '\n';
}

}  // namespace padspace
