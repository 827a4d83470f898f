#include "padspace/pipeline.hpp"

#include <map>

#include "padspace/error.hpp"

namespace padspace {

FeatureTable compute_features(const std::vector<ManifestEntry>& entries,
                              const FrameConfig& cfg) {
    FeatureTable table;
    table.values.resize(static_cast<Eigen::Index>(entries.size()),
                        kFeatureDims);
    Eigen::Index r = 0;
    for (const auto& entry : entries) {
        AudioClip clip = read_wav(entry.resolved_path);
        if (clip.sample_rate != kCanonicalRate) {
            clip = resample(clip, kCanonicalRate);
        }
        table.values.row(r++) = pooled_features(clip, cfg).transpose();
        table.clip_ids.push_back(entry.path);
    }
    return table;
}

TrainingSet select_training_set(const FeatureTable& features,
                                const Manifest& manifest) {
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < features.clip_ids.size(); ++i) {
        row_of.emplace(features.clip_ids[i], static_cast<Eigen::Index>(i));
    }

    TrainingSet set;
    std::vector<Eigen::Index> rows;
    for (const auto& entry : manifest.entries) {
        if (entry.split != Split::kTrain || !entry.label) continue;
        const auto it = row_of.find(entry.path);
        if (it == row_of.end()) {
            throw DataError("feature cache is missing clip '" + entry.path +
                            "'");
        }
        rows.push_back(it->second);
        set.label_ids.push_back(manifest.registry.id_of(*entry.label));
        set.labels.push_back(*entry.label);
        set.clip_ids.push_back(entry.path);
    }
    if (rows.empty()) {
        throw DataError("manifest has no labeled train-split clips");
    }
    set.features.resize(static_cast<Eigen::Index>(rows.size()),
                        features.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        set.features.row(static_cast<Eigen::Index>(i)) =
            features.values.row(rows[i]);
    }
    return set;
}

TrainResult train_pipeline(const FeatureTable& features,
                           const Manifest& manifest, const TrainConfig& cfg) {
    const TrainingSet set = select_training_set(features, manifest);
    const InputNormalizer norm = InputNormalizer::fit(set.features);
    const Eigen::MatrixXd normalized = norm.apply_rows(set.features);
    return train_classifier(normalized, set.label_ids, manifest.registry, norm,
                            cfg);
}

EdPredictor fit_pipeline(const MlpModel& model, const FeatureTable& features,
                         const Manifest& manifest, const AnchorTable& anchors,
                         const ReductionConfig& cfg,
                         const FrameConfig& frame_cfg, int k_pred) {
    const TrainingSet set = select_training_set(features, manifest);
    cfg.validate(static_cast<int>(set.features.rows()));

    Eigen::MatrixXd embeddings(set.features.rows(), kEmbedDim);
    for (Eigen::Index i = 0; i < set.features.rows(); ++i) {
        embeddings.row(i) = embed(model, set.features.row(i).transpose()).transpose();
    }

    const KnnGraph knn = build_knn(embeddings, cfg.k);
    const DirectedMemberships memberships = calibrate_fuzzy(knn);
    FuzzyGraph graph = symmetrize(memberships);
    graph = supervise(graph, set.label_ids, cfg.supervision_weight);

    const EmbeddingLayout init =
        init_anchored(set.clip_ids, set.labels, anchors,
                      cfg.anchor_noise_sigma, cfg.seed);
    const KernelParams kernel = fit_kernel(cfg.min_dist);
    const EmbeddingLayout layout =
        optimize_layout(graph, init, anchors, kernel, cfg);

    EdPredictor pred;
    pred.model = model;
    pred.embeddings = std::move(embeddings);
    pred.layout = layout;
    pred.anchors = anchors;
    pred.frame_cfg = frame_cfg;
    pred.k_pred = std::min(k_pred, layout.size());
    pred.validate();
    return pred;
}

}  // namespace padspace
