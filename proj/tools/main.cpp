#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "padspace/analysis.hpp"
#include "padspace/csv.hpp"
#include "padspace/error.hpp"
#include "padspace/pipeline.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace padspace;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<long> seed;
    std::optional<std::string> workdir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path,
                    "key=value config file (flags override file values)");
    cmd->add_option("--seed", opts.seed, "run seed (default 7)");
    cmd->add_option("--workdir", opts.workdir,
                    "output directory (default $PADSPACE_WORKDIR or '.')");
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) cfg.apply_file(opts.config_path);
    if (opts.seed) cfg.seed = static_cast<std::uint64_t>(*opts.seed);
    if (opts.workdir) cfg.workdir = *opts.workdir;
    return cfg;
}

std::string default_out(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.effective_workdir()) / name).string();
}

std::string pad_2f(const PadVector& pad) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%.2f", pad.pleasure, pad.arousal,
                  pad.dominance);
    return buf;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::kCsv;
    if (name == "json") return ReportFormat::kJson;
    throw DataError("format must be csv or json, got '" + name + "'");
}

int run_app(int argc, char** argv) {
    CLI::App app{
        "padspace: pleasure-arousal-dominance embeddings for emotional "
        "speech, with anchored dimensionality reduction"};
    app.require_subcommand(1);

    // ---- features ----------------------------------------------------
    auto* features_cmd = app.add_subcommand(
        "features", "Compute and cache 88-d clip features as CSV");
    CommonOpts f_common;
    std::string f_manifest;
    std::optional<std::string> f_out;
    std::optional<int> f_frame_len, f_hop;
    features_cmd->add_option("--manifest", f_manifest, "corpus manifest CSV")
        ->required();
    features_cmd->add_option("--out", f_out,
                             "output CSV (default <workdir>/features.csv)");
    features_cmd->add_option("--frame-len", f_frame_len,
                             "frame length in samples (default 400)");
    features_cmd->add_option("--hop", f_hop, "hop in samples (default 160)");
    add_common(features_cmd, f_common);
    features_cmd->callback([&] {
        RunConfig cfg = resolve_config(f_common);
        if (f_frame_len) cfg.frame_len = *f_frame_len;
        if (f_hop) cfg.hop = *f_hop;
        const std::string out = f_out ? *f_out : default_out(cfg, "features.csv");
        const Manifest manifest = load_manifest(f_manifest);
        std::cerr << "[features] clips=" << manifest.entries.size()
                  << " frame_len=" << cfg.frame_len << " hop=" << cfg.hop
                  << '\n';
        const FeatureTable table =
            compute_features(manifest.entries, cfg.frame_config());
        write_feature_table(out, table);
        std::cerr << "[features] wrote " << out << '\n';
    });

    // ---- train -------------------------------------------------------
    auto* train_cmd = app.add_subcommand(
        "train", "Train the emotion classifier on cached features");
    CommonOpts t_common;
    std::string t_features, t_manifest;
    std::optional<std::string> t_model_out, t_loss_out;
    std::optional<int> t_epochs, t_batch;
    std::optional<double> t_lr;
    train_cmd->add_option("--features", t_features, "feature cache CSV")
        ->required();
    train_cmd->add_option("--manifest", t_manifest, "corpus manifest CSV")
        ->required();
    train_cmd->add_option("--out-model", t_model_out,
                          "model file (default <workdir>/model.json)");
    train_cmd->add_option("--loss-csv", t_loss_out,
                          "loss trace CSV (default <workdir>/loss.csv)");
    train_cmd->add_option("--epochs", t_epochs, "training epochs (default 100)");
    train_cmd->add_option("--batch-size", t_batch, "batch size (default 64)");
    train_cmd->add_option("--learning-rate", t_lr,
                          "Adam learning rate (default 0.0001)");
    add_common(train_cmd, t_common);
    train_cmd->callback([&] {
        RunConfig cfg = resolve_config(t_common);
        if (t_epochs) cfg.epochs = *t_epochs;
        if (t_batch) cfg.batch_size = *t_batch;
        if (t_lr) cfg.learning_rate = *t_lr;
        const std::string model_out =
            t_model_out ? *t_model_out : default_out(cfg, "model.json");
        const std::string loss_out =
            t_loss_out ? *t_loss_out : default_out(cfg, "loss.csv");

        std::cerr << "[train] epochs=" << cfg.epochs
                  << " batch_size=" << cfg.batch_size
                  << " learning_rate=" << cfg.learning_rate
                  << " seed=" << cfg.seed << '\n';
        if (cfg.epochs == 0) {
            std::cerr << "[train] warning: epochs=0, writing the initialized "
                         "model untrained\n";
        }
        const Manifest manifest = load_manifest(t_manifest);
        const FeatureTable features = read_feature_table(t_features);
        const TrainResult result =
            train_pipeline(features, manifest, cfg.train_config());
        save_model(model_out, result.model);
        write_loss_trace(loss_out, result.loss_trace);
        std::cerr << "[train] wrote " << model_out << " and " << loss_out
                  << '\n';
    });

    // ---- fit ---------------------------------------------------------
    auto* fit_cmd = app.add_subcommand(
        "fit", "Embed the training set and fit the anchored PAD layout");
    CommonOpts r_common;
    std::string r_model, r_features, r_manifest;
    std::optional<std::string> r_out_dir, r_anchors;
    std::optional<int> r_k, r_layout_epochs, r_neg_rate, r_k_pred;
    std::optional<double> r_min_dist, r_layout_lr, r_noise, r_sup_w, r_pull;
    fit_cmd->add_option("--model", r_model, "trained model.json")->required();
    fit_cmd->add_option("--features", r_features, "feature cache CSV")
        ->required();
    fit_cmd->add_option("--manifest", r_manifest, "corpus manifest CSV")
        ->required();
    fit_cmd->add_option("--out-dir", r_out_dir,
                        "bundle directory (default <workdir>/bundle)");
    fit_cmd->add_option("--anchors", r_anchors,
                        "anchor table CSV (default: built-in table)");
    fit_cmd->add_option("--k", r_k, "nearest neighbors (default 20)");
    fit_cmd->add_option("--min-dist", r_min_dist,
                        "layout kernel minimum distance (default 0.1)");
    fit_cmd->add_option("--layout-lr", r_layout_lr,
                        "layout learning rate (default 0.01)");
    fit_cmd->add_option("--noise-sigma", r_noise,
                        "anchor init noise sigma (default 0.01)");
    fit_cmd->add_option("--layout-epochs", r_layout_epochs,
                        "layout optimization epochs (default 500)");
    fit_cmd->add_option("--neg-rate", r_neg_rate,
                        "negative samples per edge firing (default 5)");
    fit_cmd->add_option("--supervision-weight", r_sup_w,
                        "cross-class edge down-weight in [0,1] (default 0.5)");
    fit_cmd->add_option("--anchor-pull", r_pull,
                        "anchor relaxation strength (default 400)");
    fit_cmd->add_option("--k-pred", r_k_pred,
                        "prediction neighbor count (default 10)");
    add_common(fit_cmd, r_common);
    fit_cmd->callback([&] {
        RunConfig cfg = resolve_config(r_common);
        if (r_k) cfg.k = *r_k;
        if (r_min_dist) cfg.min_dist = *r_min_dist;
        if (r_layout_lr) cfg.layout_lr = *r_layout_lr;
        if (r_noise) cfg.anchor_noise_sigma = *r_noise;
        if (r_layout_epochs) cfg.layout_epochs = *r_layout_epochs;
        if (r_neg_rate) cfg.negative_sample_rate = *r_neg_rate;
        if (r_sup_w) cfg.supervision_weight = *r_sup_w;
        if (r_pull) cfg.anchor_pull = *r_pull;
        if (r_k_pred) cfg.k_pred = *r_k_pred;
        const std::string out_dir =
            r_out_dir ? *r_out_dir : default_out(cfg, "bundle");

        std::cerr << "[fit] k=" << cfg.k << " min_dist=" << cfg.min_dist
                  << " layout_lr=" << cfg.layout_lr
                  << " anchor_noise_sigma=" << cfg.anchor_noise_sigma
                  << " layout_epochs=" << cfg.layout_epochs
                  << " negative_sample_rate=" << cfg.negative_sample_rate
                  << " supervision_weight=" << cfg.supervision_weight
                  << " anchor_pull=" << cfg.anchor_pull
                  << " seed=" << cfg.seed << '\n';

        const AnchorTable anchors =
            r_anchors ? load_anchors(*r_anchors) : AnchorTable::builtin();
        const Manifest manifest = load_manifest(r_manifest);
        const FeatureTable features = read_feature_table(r_features);
        const MlpModel model = load_model(r_model);
        const EdPredictor pred =
            fit_pipeline(model, features, manifest, anchors,
                         cfg.reduction_config(), cfg.frame_config(), cfg.k_pred);
        save_predictor(out_dir, pred);
        std::cerr << "[fit] wrote bundle " << out_dir << '\n';
    });

    // ---- predict -------------------------------------------------------
    auto* predict_cmd = app.add_subcommand(
        "predict", "Predict PAD values for WAV files from prompt audio");
    std::string p_bundle;
    std::vector<std::string> p_wavs;
    predict_cmd->add_option("--bundle", p_bundle, "predictor bundle directory")
        ->required();
    predict_cmd->add_option("wavs", p_wavs, "input WAV files")->required();
    predict_cmd->callback([&] {
        const EdPredictor pred = load_predictor(p_bundle);
        for (const auto& wav : p_wavs) {
            const PadVector pad = predict_ed(pred, read_wav(wav));
            std::cout << wav << ',' << csv::format_g6(pad.pleasure) << ','
                      << csv::format_g6(pad.arousal) << ','
                      << csv::format_g6(pad.dominance) << '\n';
        }
    });

    // ---- control -------------------------------------------------------
    auto* control_cmd = app.add_subcommand(
        "control", "Resolve a user-assigned PAD from a label or raw triple");
    std::string c_bundle, c_label, c_pad;
    int c_exemplars = 0;
    control_cmd->add_option("--bundle", c_bundle, "predictor bundle directory")
        ->required();
    control_cmd->add_option("--label", c_label, "anchor-table emotion label");
    control_cmd->add_option("--pad", c_pad, "raw triple p,a,d (clamped)");
    control_cmd->add_option("--exemplars", c_exemplars,
                            "also list the n nearest training exemplars");
    control_cmd->callback([&] {
        if (c_label.empty() == c_pad.empty()) {
            throw DataError("control needs exactly one of --label or --pad");
        }
        const EdPredictor pred = load_predictor(c_bundle);
        PadVector pad;
        if (!c_label.empty()) {
            pad = control_ed(pred.anchors, c_label);
        } else {
            const auto parts = csv::split_row(c_pad);
            if (parts.size() != 3) {
                throw DataError("--pad expects p,a,d, got '" + c_pad + "'");
            }
            pad = control_ed(csv::parse_double(parts[0], "pad pleasure"),
                             csv::parse_double(parts[1], "pad arousal"),
                             csv::parse_double(parts[2], "pad dominance"));
        }
        std::cout << pad_2f(pad) << '\n';
        if (c_exemplars > 0) {
            for (const auto& ex : nearest_exemplars(pred, pad, c_exemplars)) {
                std::cout << ex.clip_id << ',' << ex.label << ','
                          << csv::format_g6(ex.distance) << '\n';
            }
        }
    });

    // ---- analyze -------------------------------------------------------
    auto* analyze_cmd = app.add_subcommand(
        "analyze",
        "Per-emotion acoustic statistics or a PAD separability report");
    CommonOpts a_common;
    std::string a_corpus, a_bundle, a_layout;
    std::string a_group = "label";
    std::string a_only;
    std::string a_format = "csv";
    std::optional<std::string> a_out;
    bool a_separability = false;
    bool a_anchors_only = false;
    std::string a_anchors_file;
    analyze_cmd->add_option("--corpus", a_corpus,
                            "manifest of clips to analyze");
    analyze_cmd->add_option("--bundle", a_bundle,
                            "predictor bundle (octant grouping, layouts)");
    analyze_cmd->add_option("--group", a_group,
                            "grouping: label or octant (default label)");
    analyze_cmd->add_option("--only", a_only,
                            "restrict the report to one group name");
    analyze_cmd->add_flag("--separability", a_separability,
                          "dominance-pair separability report instead of "
                          "acoustic statistics");
    analyze_cmd->add_option("--layout", a_layout,
                            "layout CSV for --separability");
    analyze_cmd->add_flag("--anchors-only", a_anchors_only,
                          "run --separability on raw anchors");
    analyze_cmd->add_option("--anchors", a_anchors_file,
                            "anchor table CSV (default: built-in table)");
    analyze_cmd->add_option("--format", a_format, "csv or json (default csv)");
    analyze_cmd->add_option("--out", a_out,
                            "output path (default <workdir>/report.<fmt>)");
    add_common(analyze_cmd, a_common);
    analyze_cmd->callback([&] {
        RunConfig cfg = resolve_config(a_common);
        const ReportFormat format = parse_format(a_format);
        const std::string out =
            a_out ? *a_out
                  : default_out(cfg, a_format == "json" ? "report.json"
                                                        : "report.csv");
        if (a_separability) {
            EmbeddingLayout layout;
            if (a_anchors_only) {
                const AnchorTable anchors = a_anchors_file.empty()
                                                ? AnchorTable::builtin()
                                                : load_anchors(a_anchors_file);
                layout = layout_from_anchors(anchors);
            } else if (!a_layout.empty()) {
                layout = load_layout(a_layout);
            } else if (!a_bundle.empty()) {
                layout = load_predictor(a_bundle).layout;
            } else {
                throw DataError(
                    "--separability needs --layout, --bundle, or "
                    "--anchors-only");
            }
            const SeparabilityReport report = separability_report(layout);
            export_separability(report, out, format);
            for (const auto& p : report.pairs) {
                std::cerr << "[analyze] " << p.first << '-' << p.second
                          << " delta_d=" << csv::format_g6(p.delta_d) << '\n';
            }
            std::cerr << "[analyze] wrote " << out << '\n';
            return;
        }

        if (a_corpus.empty()) {
            throw DataError("analyze needs --corpus (or --separability)");
        }
        const Manifest manifest = load_manifest(a_corpus);
        Grouping grouping;
        if (a_group == "label") {
            grouping = Grouping::kByLabel;
        } else if (a_group == "octant") {
            grouping = Grouping::kByPredictedOctant;
        } else {
            throw DataError("--group must be label or octant, got '" +
                            a_group + "'");
        }
        EdPredictor pred;
        const EdPredictor* pred_ptr = nullptr;
        if (grouping == Grouping::kByPredictedOctant) {
            if (a_bundle.empty()) {
                throw DataError("octant grouping needs --bundle");
            }
            pred = load_predictor(a_bundle);
            pred_ptr = &pred;
        }
        EmotionStats stats = emotion_stats(manifest.entries, cfg.frame_config(),
                                           grouping, pred_ptr);
        if (!a_only.empty()) {
            EmotionStats filtered;
            for (auto& g : stats.groups) {
                if (g.group == a_only) filtered.groups.push_back(std::move(g));
            }
            if (filtered.groups.empty()) throw DataError("no clips in group");
            stats = std::move(filtered);
        }
        export_stats(stats, out, format);
        std::cerr << "[analyze] groups=" << stats.groups.size() << " wrote "
                  << out << '\n';
    });

    // ---- generate ------------------------------------------------------
    auto* gen_cmd = app.add_subcommand(
        "generate", "Generate the synthetic labeled corpus (WAVs + manifest)");
    CommonOpts g_common;
    std::string g_out;
    std::string g_spec;
    int g_clips = 20;
    gen_cmd->add_option("--out", g_out, "corpus output directory")->required();
    gen_cmd->add_option("--clips", g_clips,
                        "clips per label for the built-in recipe (default 20)");
    gen_cmd->add_option("--spec", g_spec,
                        "custom spec CSV: label,base_f0,f0_jitter,amplitude,"
                        "am_rate,switch_rate,duration_s,clips");
    add_common(gen_cmd, g_common);
    gen_cmd->callback([&] {
        const RunConfig cfg = resolve_config(g_common);
        std::vector<SynthSpec> specs;
        if (!g_spec.empty()) {
            const auto rows = csv::read_file(g_spec);
            if (rows.empty() ||
                rows[0] != csv::split_row("label,base_f0,f0_jitter,amplitude,"
                                          "am_rate,switch_rate,duration_s,clips")) {
                throw DataError("bad spec header in " + g_spec);
            }
            for (std::size_t r = 1; r < rows.size(); ++r) {
                if (rows[r].size() != 8) {
                    throw DataError("bad spec row " + std::to_string(r + 1));
                }
                SynthSpec s;
                s.label = rows[r][0];
                s.base_f0_hz = csv::parse_double(rows[r][1], "base_f0");
                s.f0_jitter_hz = csv::parse_double(rows[r][2], "f0_jitter");
                s.amplitude = csv::parse_double(rows[r][3], "amplitude");
                s.am_rate_hz = csv::parse_double(rows[r][4], "am_rate");
                s.switch_rate_hz = csv::parse_double(rows[r][5], "switch_rate");
                s.duration_s = csv::parse_double(rows[r][6], "duration_s");
                s.clips = static_cast<int>(csv::parse_long(rows[r][7], "clips"));
                specs.push_back(std::move(s));
            }
        } else {
            specs = default_synth_specs(g_clips);
        }
        const GeneratedCorpus corpus = generate_corpus(specs, g_out, cfg.seed);
        std::cerr << "[generate] clips=" << corpus.entries.size()
                  << " manifest=" << corpus.manifest_path << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are input errors
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
