#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "padspace/audio.hpp"
#include "padspace/classifier.hpp"
#include "padspace/dsp.hpp"
#include "padspace/reduction.hpp"

namespace padspace {

/// A pleasure/arousal/dominance triple clamped to [-1, 1] on output paths.
struct PadVector {
    double pleasure = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;

    static PadVector clamped(double p, double a, double d);
    static PadVector from(const Pad& v) { return clamped(v(0), v(1), v(2)); }
    Pad as_eigen() const { return {pleasure, arousal, dominance}; }
};

/// Frozen inference bundle: classifier, the training clips' 128-d
/// embeddings, their fitted layout rows, and the anchor table.
struct EdPredictor {
    MlpModel model;
    Eigen::MatrixXd embeddings;  // n x 128, row-aligned with layout
    EmbeddingLayout layout;
    AnchorTable anchors;
    FrameConfig frame_cfg;
    int k_pred = 10;

    int size() const { return static_cast<int>(embeddings.rows()); }
    void validate() const;
};

/// Maps new audio into PAD space: embed the clip, find the k_pred nearest
/// training embeddings, and average their layout rows with exp(-d/tau)
/// weights where tau is the mean neighbor distance. An exact embedding
/// match returns that clip's own layout row.
PadVector predict_ed(const EdPredictor& pred, const AudioClip& clip);

/// Same mapping starting from a raw 128-d embedding.
PadVector predict_ed_from_embedding(const EdPredictor& pred,
                                    const Eigen::VectorXd& embedding);

/// User-assigned ED: either an anchor-table label or a raw triple that is
/// clamped component-wise. Unknown labels raise a DataError listing the
/// available labels.
PadVector control_ed(const AnchorTable& anchors, const std::string& label);
PadVector control_ed(double pleasure, double arousal, double dominance);

struct Exemplar {
    std::string clip_id;
    std::string label;
    double distance = 0.0;
};

/// The n training clips nearest to a PAD point, ascending by layout
/// distance, ties by lower clip index. Requires 1 <= n <= N.
std::vector<Exemplar> nearest_exemplars(const EdPredictor& pred,
                                        const PadVector& pad, int n);

/// Bundle directory layout: model.json, embeddings.csv, layout.csv,
/// anchors.csv, predictor.json.
void save_predictor(const std::string& dir, const EdPredictor& pred);
EdPredictor load_predictor(const std::string& dir);

/// embeddings.csv: header `clip_id,e0,...,e127`.
void write_embedding_table(const std::string& path,
                           const std::vector<std::string>& clip_ids,
                           const Eigen::MatrixXd& embeddings);
Eigen::MatrixXd read_embedding_table(const std::string& path,
                                     std::vector<std::string>* clip_ids);

}  // namespace padspace
