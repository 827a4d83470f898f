#include "padspace/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace padspace {

PadVector PadVector::clamped(double p, double a, double d) {
    if (!std::isfinite(p) || !std::isfinite(a) || !std::isfinite(d)) {
        throw DataError("PAD components must be finite");
    }
    return {std::clamp(p, -1.0, 1.0), std::clamp(a, -1.0, 1.0),
            std::clamp(d, -1.0, 1.0)};
}

void EdPredictor::validate() const {
    if (embeddings.rows() != layout.size()) {
        throw DataError("predictor embeddings and layout rows differ");
    }
    if (embeddings.rows() == 0) throw DataError("predictor has no training data");
    if (k_pred < 1 || k_pred > size()) {
        throw DataError("k_pred must be in [1, N]");
    }
    if (embeddings.cols() != kEmbedDim) {
        throw DataError("predictor embeddings must be 128-d");
    }
}

PadVector predict_ed_from_embedding(const EdPredictor& pred,
                                    const Eigen::VectorXd& embedding) {
    pred.validate();
    if (embedding.size() != pred.embeddings.cols()) {
        throw DataError("embedding dimension mismatch");
    }
    const int n = pred.size();
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (Eigen::Index d = 0; d < embedding.size(); ++d) {
            const double diff = embedding(d) - pred.embeddings(i, d);
            sq += diff * diff;
        }
        cand.emplace_back(sq, i);
    }
    const int k = pred.k_pred;
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());

    if (cand[0].first == 0.0) {
        // exact match: return the stored row (avoids 0/0 in the kernel)
        return PadVector::from(
            pred.layout.coords.row(cand[0].second).transpose());
    }

    double tau = 0.0;
    for (int r = 0; r < k; ++r) tau += std::sqrt(cand[static_cast<std::size_t>(r)].first);
    tau /= k;

    Pad acc = Pad::Zero();
    double wsum = 0.0;
    for (int r = 0; r < k; ++r) {
        const double d = std::sqrt(cand[static_cast<std::size_t>(r)].first);
        const double w = std::exp(-d / tau);
        acc += w * pred.layout.coords.row(cand[static_cast<std::size_t>(r)].second)
                       .transpose();
        wsum += w;
    }
    return PadVector::from(acc / wsum);
}

PadVector predict_ed(const EdPredictor& pred, const AudioClip& clip) {
    AudioClip canonical =
        clip.sample_rate == kCanonicalRate ? clip : resample(clip, kCanonicalRate);
    // Features pass through the cache's decimal representation so that a
    // training clip reproduces its stored embedding exactly.
    const Eigen::VectorXd features =
        quantize_features_g6(pooled_features(canonical, pred.frame_cfg));
    return predict_ed_from_embedding(pred, embed(pred.model, features));
}

PadVector control_ed(const AnchorTable& anchors, const std::string& label) {
    if (!anchors.contains(label)) {
        std::string known;
        for (const auto& l : anchors.labels()) {
            if (!known.empty()) known += ", ";
            known += l;
        }
        throw DataError("unknown label '" + label + "'; available: " + known);
    }
    return PadVector::from(anchors.at(label));
}

PadVector control_ed(double pleasure, double arousal, double dominance) {
    return PadVector::clamped(pleasure, arousal, dominance);
}

std::vector<Exemplar> nearest_exemplars(const EdPredictor& pred,
                                        const PadVector& pad, int n) {
    pred.validate();
    if (n < 1 || n > pred.size()) {
        throw DataError("exemplar count must be in [1, " +
                        std::to_string(pred.size()) + "]");
    }
    const Pad q = pad.as_eigen();
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(pred.size()));
    for (int i = 0; i < pred.size(); ++i) {
        cand.emplace_back(
            (pred.layout.coords.row(i).transpose() - q).squaredNorm(), i);
    }
    std::partial_sort(cand.begin(), cand.begin() + n, cand.end());
    std::vector<Exemplar> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const int i = cand[static_cast<std::size_t>(r)].second;
        out.push_back({pred.layout.clip_ids[static_cast<std::size_t>(i)],
                       pred.layout.labels[static_cast<std::size_t>(i)],
                       std::sqrt(cand[static_cast<std::size_t>(r)].first)});
    }
    return out;
}

void write_embedding_table(const std::string& path,
                           const std::vector<std::string>& clip_ids,
                           const Eigen::MatrixXd& embeddings) {
    if (embeddings.rows() != static_cast<Eigen::Index>(clip_ids.size())) {
        throw DataError("embedding rows do not match clip ids");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embeddings file: " + path);
    out << "clip_id";
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) out << ",e" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
        out << clip_ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < embeddings.cols(); ++c) {
            out << ',' << csv::format_g17(embeddings(r, c));
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing embeddings file: " + path);
}

Eigen::MatrixXd read_embedding_table(const std::string& path,
                                     std::vector<std::string>* clip_ids) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "clip_id") {
        throw DataError("bad embeddings file header: " + path);
    }
    const std::size_t dims = rows[0].size() - 1;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()) - 1,
                        static_cast<Eigen::Index>(dims));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != dims + 1) {
            throw DataError("bad embeddings row " + std::to_string(r + 1) +
                            " in " + path);
        }
        if (clip_ids) clip_ids->push_back(rows[r][0]);
        for (std::size_t c = 0; c < dims; ++c) {
            out(static_cast<Eigen::Index>(r) - 1,
                static_cast<Eigen::Index>(c)) =
                csv::parse_double(rows[r][c + 1], "embedding value");
        }
    }
    return out;
}

void save_predictor(const std::string& dir, const EdPredictor& pred) {
    pred.validate();
    fs::create_directories(dir);
    save_model((fs::path(dir) / "model.json").string(), pred.model);
    write_embedding_table((fs::path(dir) / "embeddings.csv").string(),
                          pred.layout.clip_ids, pred.embeddings);
    save_layout((fs::path(dir) / "layout.csv").string(), pred.layout);
    save_anchors((fs::path(dir) / "anchors.csv").string(), pred.anchors);

    json doc;
    doc["schema_version"] = 1;
    doc["k_pred"] = pred.k_pred;
    doc["tau_policy"] = "mean_neighbor_distance";
    doc["frame_len"] = pred.frame_cfg.frame_len;
    doc["hop"] = pred.frame_cfg.hop;
    std::ofstream out(fs::path(dir) / "predictor.json");
    if (!out) throw DataError("cannot write predictor.json in " + dir);
    out << doc.dump(2) << '\n';
}

EdPredictor load_predictor(const std::string& dir) {
    EdPredictor pred;
    pred.model = load_model((fs::path(dir) / "model.json").string());
    std::vector<std::string> embed_ids;
    pred.embeddings = read_embedding_table(
        (fs::path(dir) / "embeddings.csv").string(), &embed_ids);
    pred.layout = load_layout((fs::path(dir) / "layout.csv").string());
    pred.anchors = load_anchors((fs::path(dir) / "anchors.csv").string());

    std::ifstream in(fs::path(dir) / "predictor.json");
    if (!in) throw DataError("cannot open predictor.json in " + dir);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("predictor.json parse error: " + std::string(e.what()));
    }
    if (doc.value("schema_version", 0) != 1) {
        throw DataError("predictor.json: unsupported schema_version");
    }
    pred.k_pred = doc.at("k_pred").get<int>();
    pred.frame_cfg.frame_len = doc.value("frame_len", 400);
    pred.frame_cfg.hop = doc.value("hop", 160);

    if (embed_ids != pred.layout.clip_ids) {
        throw DataError("bundle embeddings and layout disagree on clips");
    }
    pred.validate();
    return pred;
}

}  // namespace padspace
