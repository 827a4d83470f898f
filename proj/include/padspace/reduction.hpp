#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace padspace {

using Pad = Eigen::Vector3d;

/// Emotion label -> pleasure/arousal/dominance triple in [-1, 1].
class AnchorTable {
public:
    AnchorTable() = default;

    /// The ten built-in rows (Neutral at the origin).
    static AnchorTable builtin();

    void set(const std::string& label, const Pad& pad);
    Pad at(const std::string& label) const;  // throws DataError, names label
    bool contains(const std::string& label) const;
    const std::map<std::string, Pad>& entries() const { return entries_; }
    std::vector<std::string> labels() const;

private:
    std::map<std::string, Pad> entries_;
};

/// Anchor table file: CSV `label,P,A,D`.
AnchorTable load_anchors(const std::string& path);
void save_anchors(const std::string& path, const AnchorTable& anchors);

struct ReductionConfig {
    int k = 20;
    double min_dist = 0.1;
    double layout_lr = 1e-2;
    double anchor_noise_sigma = 0.01;
    int epochs = 500;
    int negative_sample_rate = 5;
    double supervision_weight = 0.5;  // in [0, 1]
    double anchor_pull = 400.0;       // 0 disables the per-epoch anchor pull
    std::uint64_t seed = 7;

    void validate(int n_points) const;
};

/// Exact Euclidean k-nearest-neighbor lists, ascending by distance,
/// ties broken by lower index. No self edges.
struct KnnGraph {
    Eigen::MatrixXi indices;    // n x k
    Eigen::MatrixXd distances;  // n x k

    int size() const { return static_cast<int>(indices.rows()); }
    int k() const { return static_cast<int>(indices.cols()); }
};

KnnGraph build_knn(const Eigen::MatrixXd& points, int k);

/// Directed fuzzy memberships over the kNN lists: the nearest neighbor
/// gets weight 1 and each row sums to log2(k) after calibration.
struct DirectedMemberships {
    Eigen::MatrixXi indices;  // same shape as the kNN graph
    Eigen::MatrixXd weights;
    std::vector<int> degenerate_points;  // all-zero-distance rows
};

DirectedMemberships calibrate_fuzzy(const KnnGraph& knn);

/// Symmetric weighted edge set; weights in (0, 1].
struct FuzzyEdge {
    int i = 0;
    int j = 0;  // i < j
    double weight = 0.0;
};

struct FuzzyGraph {
    int n = 0;
    std::vector<FuzzyEdge> edges;  // sorted by (i, j)

    double weight_between(int i, int j) const;  // 0 when absent
};

/// Probabilistic union a + b - a*b of the two edge directions.
FuzzyGraph symmetrize(const DirectedMemberships& memberships);

/// Scales cross-class edge weights by (1 - w); zero-weight edges are
/// dropped. Every node needs a label.
FuzzyGraph supervise(const FuzzyGraph& graph, const std::vector<int>& label_ids,
                     double w);

/// N x 3 layout rows plus per-class centroids.
struct EmbeddingLayout {
    std::vector<std::string> clip_ids;
    std::vector<std::string> labels;
    Eigen::MatrixXd coords;  // n x 3

    int size() const { return static_cast<int>(coords.rows()); }
    Pad centroid(const std::string& label) const;  // throws if label absent
    std::map<std::string, Pad> centroids() const;
};

/// Layout rows at each point's class anchor plus seeded N(0, sigma^2)
/// noise. Throws DataError naming any label without an anchor.
EmbeddingLayout init_anchored(const std::vector<std::string>& clip_ids,
                              const std::vector<std::string>& labels,
                              const AnchorTable& anchors, double noise_sigma,
                              std::uint64_t seed);

/// Parameters of the low-dimensional kernel q(d) = 1 / (1 + a * d^(2b)).
struct KernelParams {
    double a = 0.0;
    double b = 0.0;

    double at(double distance) const {
        return 1.0 / (1.0 + a * std::pow(distance * distance, b));
    }
};

/// Least-squares fit of (a, b) against the min_dist target curve
/// (1 for d <= min_dist, exp(-(d - min_dist)) beyond) over d in [0, 3]
/// sampled at 300 points. Deterministic Levenberg-Marquardt.
KernelParams fit_kernel(double min_dist);

/// Stochastic layout refinement: per epoch every edge fires with
/// probability proportional to its weight (epochs-per-sample schedule);
/// a firing applies the attractive kernel gradient to both endpoints and
/// `negative_sample_rate` repulsive updates against uniform random
/// non-neighbors of the head. Per-coordinate moves clip to +/-4 and the
/// learning rate decays linearly to zero. After each epoch every point
/// relaxes toward its class anchor by exp(-anchor_pull * lr_epoch), which
/// keeps the layout in the anchor frame. Seeded and deterministic.
EmbeddingLayout optimize_layout(const FuzzyGraph& graph,
                                const EmbeddingLayout& init,
                                const AnchorTable& anchors,
                                const KernelParams& kernel,
                                const ReductionConfig& cfg);

/// Layout file: CSV `clip_id,label,P,A,D`, 6 significant digits.
void save_layout(const std::string& path, const EmbeddingLayout& layout);
EmbeddingLayout load_layout(const std::string& path);

}  // namespace padspace
