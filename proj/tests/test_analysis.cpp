#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "padspace/analysis.hpp"
#include "padspace/error.hpp"
#include "support/helpers.hpp"

using namespace padspace;
using testsupport::TempDir;

namespace {

SynthSpec spec_for(const std::string& label, double f0, int clips,
                   double duration = 1.5) {
    SynthSpec s;
    s.label = label;
    s.base_f0_hz = f0;
    s.f0_jitter_hz = 3.0;
    s.amplitude = 0.6;
    s.am_rate_hz = 2.0;
    s.switch_rate_hz = 2.0;
    s.duration_s = duration;
    s.clips = clips;
    return s;
}

ManifestEntry entry_for(const std::string& path, const std::string& label) {
    ManifestEntry e;
    e.path = path;
    e.resolved_path = path;
    e.label = label;
    return e;
}

}  // namespace

TEST_CASE("synthesized clips are deterministic and in range") {
    const SynthSpec spec = spec_for("Angry", 205, 1);
    const AudioClip a = synthesize_clip(spec, 7, 0);
    const AudioClip b = synthesize_clip(spec, 7, 0);
    CHECK(a.samples == b.samples);
    CHECK(a.sample_rate == kCanonicalRate);
    for (const double s : a.samples) {
        CHECK(std::abs(s) <= 1.0);
    }
    // different clip index, different waveform
    const AudioClip c = synthesize_clip(spec, 7, 1);
    CHECK(a.samples != c.samples);
}

TEST_CASE("generate_corpus writes a loadable, seeded, split corpus") {
    TempDir dir("corpus");
    const std::vector<SynthSpec> specs = {spec_for("Excited", 280, 10),
                                          spec_for("Sad", 120, 10),
                                          spec_for("Empty", 200, 0)};
    const GeneratedCorpus corpus = generate_corpus(specs, dir.str(), 7);
    CHECK(corpus.entries.size() == 20);

    const Manifest m = load_manifest(corpus.manifest_path);
    CHECK(m.entries.size() == 20);
    // zero-clip label never appears
    CHECK(m.registry.labels() == std::vector<std::string>{"Excited", "Sad"});
    // 80/20 split per label
    int excited_test = 0;
    for (const auto& e : m.entries) {
        if (*e.label == "Excited" && e.split == Split::kTest) ++excited_test;
    }
    CHECK(excited_test == 2);

    // byte-identical regeneration
    TempDir dir2("corpus2");
    generate_corpus(specs, dir2.str(), 7);
    const std::string name = "wav/Excited_0003.wav";
    CHECK(testsupport::read_text(dir.file(name)) ==
          testsupport::read_text(dir2.file(name)));
}

TEST_CASE("planted pitch survives synthesis and measurement") {
    TempDir dir("pitch");
    const GeneratedCorpus corpus = generate_corpus(
        {spec_for("Excited", 280, 6), spec_for("Sad", 120, 6)}, dir.str(), 7);
    const EmotionStats stats =
        emotion_stats(corpus.entries, FrameConfig{}, Grouping::kByLabel);
    REQUIRE(stats.groups.size() == 2);
    for (const auto& g : stats.groups) {
        REQUIRE(g.pitch.has_value());
        const double target = g.group == "Excited" ? 280.0 : 120.0;
        CHECK(std::abs(g.pitch->mean - target) <= 10.0);
    }
}

TEST_CASE("emotion stats on one constant sine clip") {
    TempDir dir("sine");
    write_wav(dir.file("sine.wav"), testsupport::make_sine(1000, 0.5, 1.0));
    const EmotionStats stats = emotion_stats(
        {entry_for(dir.file("sine.wav"), "Tone")}, FrameConfig{},
        Grouping::kByLabel);
    REQUIRE(stats.groups.size() == 1);
    CHECK(stats.groups[0].energy.mean ==
          doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(2e-2));
}

TEST_CASE("planted f0 ordering is recovered exactly") {
    TempDir dir("order");
    const GeneratedCorpus corpus =
        generate_corpus({spec_for("Excited", 280, 5), spec_for("Happy", 250, 5),
                         spec_for("Sad", 120, 5)},
                        dir.str(), 7);
    const EmotionStats stats =
        emotion_stats(corpus.entries, FrameConfig{}, Grouping::kByLabel);
    double excited = 0, happy = 0, sad = 0;
    for (const auto& g : stats.groups) {
        REQUIRE(g.pitch.has_value());
        if (g.group == "Excited") excited = g.pitch->mean;
        if (g.group == "Happy") happy = g.pitch->mean;
        if (g.group == "Sad") sad = g.pitch->mean;
        const double target =
            g.group == "Excited" ? 280.0 : (g.group == "Happy" ? 250.0 : 120.0);
        CHECK(std::abs(g.pitch->mean - target) <= 10.0);
    }
    CHECK(excited > happy);
    CHECK(happy > sad);
}

TEST_CASE("statistics are permutation invariant") {
    TempDir dir("perm");
    const GeneratedCorpus corpus = generate_corpus(
        {spec_for("Excited", 280, 4), spec_for("Sad", 120, 4)}, dir.str(), 3);
    std::vector<ManifestEntry> reversed(corpus.entries.rbegin(),
                                        corpus.entries.rend());
    const EmotionStats a =
        emotion_stats(corpus.entries, FrameConfig{}, Grouping::kByLabel);
    const EmotionStats b =
        emotion_stats(reversed, FrameConfig{}, Grouping::kByLabel);
    REQUIRE(a.groups.size() == b.groups.size());
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
        CHECK(a.groups[i].group == b.groups[i].group);
        CHECK(a.groups[i].energy.mean == b.groups[i].energy.mean);
        CHECK(a.groups[i].pitch->mean == b.groups[i].pitch->mean);
        CHECK(a.groups[i].flux.mean == b.groups[i].flux.mean);
    }
}

TEST_CASE("a group without voiced frames reports pitch as absent") {
    TempDir dir("unvoiced");
    write_wav(dir.file("silence.wav"), testsupport::make_silence(1.0));
    const EmotionStats stats = emotion_stats(
        {entry_for(dir.file("silence.wav"), "Quiet")}, FrameConfig{},
        Grouping::kByLabel);
    REQUIRE(stats.groups.size() == 1);
    CHECK_FALSE(stats.groups[0].pitch.has_value());
    CHECK(stats.groups[0].clip_count == 1);
}

TEST_CASE("empty corpora are data errors") {
    CHECK_THROWS_WITH_AS(
        emotion_stats({}, FrameConfig{}, Grouping::kByLabel),
        doctest::Contains("no clips in group"), DataError);

    TempDir dir("nolabel");
    write_wav(dir.file("x.wav"), testsupport::make_sine(200, 0.5, 0.5));
    ManifestEntry e;
    e.path = dir.file("x.wav");
    e.resolved_path = e.path;  // unlabeled
    CHECK_THROWS_WITH_AS(
        emotion_stats({e}, FrameConfig{}, Grouping::kByLabel),
        doctest::Contains("no clips in group"), DataError);
}

TEST_CASE("separability on raw anchors reproduces the dominance signs") {
    const SeparabilityReport report =
        separability_report(layout_from_anchors(AnchorTable::builtin()));
    REQUIRE(report.pairs.size() == 3);

    const PairDelta& angry = report.pairs[0];
    CHECK(angry.first == "Angry");
    CHECK(angry.second == "Anxious");
    CHECK(angry.delta_p == doctest::Approx(-0.52).epsilon(1e-9));
    CHECK(angry.delta_a == doctest::Approx(0.0).scale(1).epsilon(1e-9));
    CHECK(angry.delta_d == doctest::Approx(0.40).epsilon(1e-9));
    CHECK(angry.dominance_positive);
    CHECK_FALSE(angry.dominance_largest);  // |dP| = 0.52 beats 0.40

    const PairDelta& alert = report.pairs[1];
    CHECK(alert.delta_d == doctest::Approx(0.58).epsilon(1e-9));
    CHECK(alert.dominance_positive);
    CHECK(alert.dominance_largest);

    const PairDelta& relaxed = report.pairs[2];
    CHECK(relaxed.delta_d == doctest::Approx(0.60).epsilon(1e-9));
    CHECK(relaxed.dominance_positive);
    CHECK(relaxed.dominance_largest);

    REQUIRE(report.excited_centroid.has_value());
    CHECK(report.excited_pa_magnitude ==
          doctest::Approx(std::hypot(0.62, 0.75)).epsilon(1e-9));
}

TEST_CASE("identical pair layouts zero the deltas and flags") {
    EmbeddingLayout layout = layout_from_anchors(AnchorTable::builtin());
    // force Anxious rows onto Angry's coordinates
    for (int i = 0; i < layout.size(); ++i) {
        if (layout.labels[static_cast<std::size_t>(i)] == "Anxious") {
            layout.coords.row(i) =
                AnchorTable::builtin().at("Angry").transpose();
        }
    }
    const SeparabilityReport report = separability_report(layout);
    CHECK(report.pairs[0].delta_p == 0.0);
    CHECK(report.pairs[0].delta_a == 0.0);
    CHECK(report.pairs[0].delta_d == 0.0);
    CHECK_FALSE(report.pairs[0].dominance_largest);
    CHECK_FALSE(report.pairs[0].dominance_positive);
}

TEST_CASE("separability requires the pair labels") {
    EmbeddingLayout layout;
    layout.clip_ids = {"a"};
    layout.labels = {"Angry"};
    layout.coords = Eigen::MatrixXd::Zero(1, 3);
    CHECK_THROWS_WITH_AS(separability_report(layout),
                         doctest::Contains("Anxious"), DataError);
}

TEST_CASE("stats export round-trips in both formats") {
    TempDir dir("export");
    EmotionStats stats;
    GroupStats g;
    g.group = "Excited";
    g.clip_count = 4;
    StatSummary pitch{4, 280.1234567, 3.5, 275.0, 280.0, 285.5};
    g.pitch = pitch;
    g.energy = {4, 0.41, 0.02, 0.38, 0.41, 0.44};
    g.flux = {4, 0.012, 0.001, 0.01, 0.012, 0.014};
    stats.groups.push_back(g);
    GroupStats quiet;
    quiet.group = "Quiet";
    quiet.clip_count = 2;
    quiet.energy = {2, 0.0, 0.0, 0.0, 0.0, 0.0};
    quiet.flux = {2, 0.0, 0.0, 0.0, 0.0, 0.0};
    stats.groups.push_back(quiet);

    for (const auto format : {ReportFormat::kCsv, ReportFormat::kJson}) {
        const std::string path =
            dir.file(format == ReportFormat::kCsv ? "r.csv" : "r.json");
        export_stats(stats, path, format);
        const EmotionStats back = import_stats(path, format);
        REQUIRE(back.groups.size() == 2);
        CHECK(back.groups[0].group == "Excited");
        REQUIRE(back.groups[0].pitch.has_value());
        // 6 significant digits guarantee 5e-6 relative error
        CHECK(back.groups[0].pitch->mean ==
              doctest::Approx(pitch.mean).epsilon(5e-6));
        CHECK(back.groups[0].pitch->max ==
              doctest::Approx(pitch.max).epsilon(5e-6));
        // order-1 values round-trip within 1e-6 absolute
        CHECK(std::abs(back.groups[0].energy.mean - g.energy.mean) < 1e-6);
        CHECK(std::abs(back.groups[0].flux.mean - g.flux.mean) < 1e-6);
        CHECK(back.groups[0].energy.count == 4);
        CHECK_FALSE(back.groups[1].pitch.has_value());
    }

    // pinned CSV header on the first non-comment line
    const std::string text = testsupport::read_text(dir.file("r.csv"));
    CHECK(text.find("group,metric,count,mean,std,min,median,max\n") !=
          std::string::npos);

    // pinned JSON schema version
    const std::string json_text = testsupport::read_text(dir.file("r.json"));
    CHECK(json_text.find("\"schema_version\": 1") != std::string::npos);
}

TEST_CASE("separability export carries both formats") {
    TempDir dir("sepexp");
    const SeparabilityReport report =
        separability_report(layout_from_anchors(AnchorTable::builtin()));
    export_separability(report, dir.file("s.csv"), ReportFormat::kCsv);
    export_separability(report, dir.file("s.json"), ReportFormat::kJson);
    const std::string csv_text = testsupport::read_text(dir.file("s.csv"));
    CHECK(csv_text.find("Angry-Anxious,") != std::string::npos);
    const std::string json_text = testsupport::read_text(dir.file("s.json"));
    CHECK(json_text.find("\"dominance_positive\": true") != std::string::npos);
    CHECK(json_text.find("\"schema_version\": 1") != std::string::npos);
}

TEST_CASE("synth spec validation") {
    SynthSpec bad = spec_for("X", 205, 1);
    bad.base_f0_hz = 50;  // outside [80, 400]
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = spec_for("X", 205, 1);
    bad.amplitude = 1.5;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = spec_for("", 205, 1);
    CHECK_THROWS_AS(bad.validate(), DataError);
}
