#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "padspace/corpus.hpp"

namespace padspace {

inline constexpr int kHiddenDim = 256;
inline constexpr int kEmbedDim = 128;

/// Per-dimension z-normalization fitted on a training corpus.
struct InputNormalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static InputNormalizer identity(int dim);
    static InputNormalizer fit(const Eigen::MatrixXd& features);
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Two hidden transforms and a softmax head. The 128-d emotion embedding
/// is the second layer's pre-activation output.
struct MlpModel {
    Eigen::MatrixXd w1, w2, w3;  // (256 x in), (128 x 256), (C x 128)
    Eigen::VectorXd b1, b2, b3;
    LabelRegistry registry;
    InputNormalizer normalizer;

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int num_classes() const { return static_cast<int>(w3.rows()); }
};

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_trace;  // mean cross-entropy per epoch
};

/// Seeded model with small random hidden weights and a zero softmax head,
/// so an untrained model predicts the uniform distribution.
MlpModel init_model(int input_dim, const LabelRegistry& registry,
                    const InputNormalizer& normalizer, std::uint64_t seed);

/// Minimizes softmax cross-entropy with Adam over seeded shuffled
/// mini-batches. `features` rows must already be normalized; the
/// normalizer is stored in the model for later raw queries. Throws
/// DataError on a single-class set, dimension mismatch, or a non-finite
/// loss (reported with its epoch index).
TrainResult train_classifier(const Eigen::MatrixXd& features,
                             const std::vector<int>& label_ids,
                             const LabelRegistry& registry,
                             const InputNormalizer& normalizer,
                             const TrainConfig& cfg);

/// Forward pass on a raw (un-normalized) feature vector up to the second
/// layer's pre-activation: the 128-d emotion embedding.
Eigen::VectorXd embed(const MlpModel& model, const Eigen::VectorXd& feature);

struct Classification {
    int label_id = 0;
    Eigen::VectorXd probabilities;
};

/// Softmax prediction; ties resolve to the lowest label id.
Classification classify(const MlpModel& model, const Eigen::VectorXd& feature);

/// Fraction of argmax predictions matching the labels. Raw features.
double evaluate_accuracy(const MlpModel& model, const Eigen::MatrixXd& features,
                         const std::vector<int>& label_ids);

/// Loss/gradients of the mean batch cross-entropy for normalized inputs;
/// exposed for the finite-difference check.
struct Gradients {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
    double loss = 0.0;
};
Gradients loss_and_gradients(const MlpModel& model,
                             const Eigen::MatrixXd& normalized_batch,
                             const std::vector<int>& label_ids);

/// model.json (schema_version 1): dims, row-major parameters, registry,
/// normalization statistics.
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

void write_loss_trace(const std::string& path,
                      const std::vector<double>& trace);

}  // namespace padspace
