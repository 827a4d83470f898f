#pragma once

#include <string>
#include <vector>

#include "padspace/analysis.hpp"
#include "padspace/classifier.hpp"
#include "padspace/corpus.hpp"
#include "padspace/dsp.hpp"
#include "padspace/predictor.hpp"
#include "padspace/reduction.hpp"

namespace padspace {

/// Reads, resamples to the canonical rate, and pools features for every
/// manifest entry, in row order. clip_id is the manifest's path field.
FeatureTable compute_features(const std::vector<ManifestEntry>& entries,
                              const FrameConfig& cfg);

/// Selects the labeled train-split rows of a manifest and aligns them with
/// cached features by clip_id.
struct TrainingSet {
    Eigen::MatrixXd features;       // raw cache values
    std::vector<int> label_ids;
    std::vector<std::string> labels;
    std::vector<std::string> clip_ids;
};
TrainingSet select_training_set(const FeatureTable& features,
                                const Manifest& manifest);

/// Fits the normalizer on the training rows and trains the classifier.
TrainResult train_pipeline(const FeatureTable& features,
                           const Manifest& manifest, const TrainConfig& cfg);

/// Embeds the training set with a trained model, runs the anchored
/// reduction, and assembles the inference bundle.
EdPredictor fit_pipeline(const MlpModel& model, const FeatureTable& features,
                         const Manifest& manifest, const AnchorTable& anchors,
                         const ReductionConfig& cfg,
                         const FrameConfig& frame_cfg, int k_pred = 10);

}  // namespace padspace
