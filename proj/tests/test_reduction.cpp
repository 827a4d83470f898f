#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "padspace/error.hpp"
#include "padspace/reduction.hpp"
#include "padspace/rng.hpp"
#include "support/helpers.hpp"

using namespace padspace;
using testsupport::TempDir;

namespace {

Eigen::MatrixXd random_points(int n, int dims, std::uint64_t seed) {
    Eigen::MatrixXd points(n, dims);
    Rng rng(seed, 77);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dims; ++d) points(i, d) = rng.normal(0, 1);
    }
    return points;
}

/// Independent double-loop brute-force kNN: full sort of all other points
/// by (squared distance, index).
void oracle_knn(const Eigen::MatrixXd& points, int k, Eigen::MatrixXi& idx,
                Eigen::MatrixXd& dist) {
    const int n = static_cast<int>(points.rows());
    idx.resize(n, k);
    dist.resize(n, k);
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> all;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double sq = 0.0;
            for (int d = 0; d < points.cols(); ++d) {
                const double diff = points(i, d) - points(j, d);
                sq += diff * diff;
            }
            all.emplace_back(sq, j);
        }
        std::sort(all.begin(), all.end());
        for (int r = 0; r < k; ++r) {
            idx(i, r) = all[static_cast<std::size_t>(r)].second;
            dist(i, r) = std::sqrt(all[static_cast<std::size_t>(r)].first);
        }
    }
}

/// Tight labeled clusters in 128-d standing in for classifier embeddings.
struct LabeledPoints {
    Eigen::MatrixXd points;
    std::vector<std::string> labels;
    std::vector<std::string> ids;
    std::vector<int> label_ids;
};

LabeledPoints clustered_embeddings(const std::vector<std::string>& labels,
                                   int per_class, std::uint64_t seed) {
    LabeledPoints set;
    const int n = static_cast<int>(labels.size()) * per_class;
    set.points.resize(n, 128);
    Rng rng(seed, 31);
    std::vector<Eigen::VectorXd> centers;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        Eigen::VectorXd center(128);
        for (int d = 0; d < 128; ++d) center(d) = rng.normal(0, 1);
        center *= 10.0 / center.norm();
        centers.push_back(center);
    }
    int row = 0;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        for (int i = 0; i < per_class; ++i) {
            for (int d = 0; d < 128; ++d) {
                set.points(row, d) = centers[c](d) + rng.normal(0, 0.5);
            }
            set.labels.push_back(labels[c]);
            set.ids.push_back(labels[c] + "_" + std::to_string(i));
            set.label_ids.push_back(static_cast<int>(c));
            ++row;
        }
    }
    return set;
}

ReductionConfig default_reduction() {
    return ReductionConfig{};
}

}  // namespace

TEST_CASE("builtin anchor table matches the published coordinates") {
    const AnchorTable t = AnchorTable::builtin();
    REQUIRE(t.entries().size() == 10);
    CHECK(t.at("Angry") == Pad(-0.51, 0.59, 0.25));
    CHECK(t.at("Happy") == Pad(0.81, 0.51, 0.46));
    CHECK(t.at("Sad") == Pad(-0.63, -0.27, -0.33));
    CHECK(t.at("Surprise") == Pad(0.40, 0.67, -0.13));
    CHECK(t.at("Anxious") == Pad(0.01, 0.59, -0.15));
    CHECK(t.at("Excited") == Pad(0.62, 0.75, 0.38));
    CHECK(t.at("Alert") == Pad(0.49, 0.57, 0.45));
    CHECK(t.at("Protected") == Pad(0.60, -0.22, -0.40));
    CHECK(t.at("Relaxed") == Pad(0.68, -0.46, 0.20));
    CHECK(t.at("Neutral") == Pad(0.00, 0.00, 0.00));
    CHECK_THROWS_WITH_AS(t.at("Bored"), doctest::Contains("Bored"), DataError);
}

TEST_CASE("anchor table CSV round-trip") {
    TempDir dir("anchors");
    const AnchorTable builtin = AnchorTable::builtin();
    save_anchors(dir.file("a.csv"), builtin);
    const AnchorTable back = load_anchors(dir.file("a.csv"));
    for (const auto& [label, pad] : builtin.entries()) {
        CHECK((back.at(label) - pad).norm() < 1e-9);
    }
}

TEST_CASE("build_knn on forced line geometry") {
    Eigen::MatrixXd points(3, 1);
    points << 0, 1, 3;
    const KnnGraph g = build_knn(points, 1);
    CHECK(g.indices(0, 0) == 1);
    CHECK(g.distances(0, 0) == 1.0);
    CHECK(g.indices(1, 0) == 0);  // tie-free: d(1,0)=1 < d(1,3)=2
    CHECK(g.distances(1, 0) == 1.0);
    CHECK(g.indices(2, 0) == 1);
    CHECK(g.distances(2, 0) == 2.0);
}

TEST_CASE("build_knn with k=N-1 sorts everything") {
    const Eigen::MatrixXd points = random_points(12, 4, 5);
    const KnnGraph g = build_knn(points, 11);
    for (int i = 0; i < 12; ++i) {
        std::vector<int> seen;
        for (int r = 0; r < 11; ++r) {
            seen.push_back(g.indices(i, r));
            if (r > 0) CHECK(g.distances(i, r) >= g.distances(i, r - 1));
            CHECK(g.indices(i, r) != i);
        }
        std::sort(seen.begin(), seen.end());
        CHECK(seen.size() == 11);  // every other point appears once
    }
}

TEST_CASE("build_knn equals the brute-force oracle exactly") {
    const Eigen::MatrixXd points = random_points(600, 16, 42);
    const KnnGraph g = build_knn(points, 20);
    Eigen::MatrixXi oidx;
    Eigen::MatrixXd odist;
    oracle_knn(points, 20, oidx, odist);
    CHECK(g.indices == oidx);
    CHECK(g.distances == odist);
}

TEST_CASE("build_knn breaks distance ties by lower index") {
    Eigen::MatrixXd points(4, 2);
    points << 0, 0,   // query
              1, 0,   // index 1, distance 1
              0, 1,   // index 2, distance 1
             -1, 0;   // index 3, distance 1
    const KnnGraph g = build_knn(points, 3);
    CHECK(g.indices(0, 0) == 1);
    CHECK(g.indices(0, 1) == 2);
    CHECK(g.indices(0, 2) == 3);
}

TEST_CASE("build_knn rejects N <= k") {
    CHECK_THROWS_AS(build_knn(random_points(5, 2, 1), 5), DataError);
}

TEST_CASE("fuzzy calibration hits the log2(k) mass") {
    const Eigen::MatrixXd points = random_points(300, 8, 9);
    const int k = 20;
    const KnnGraph g = build_knn(points, k);
    const DirectedMemberships m = calibrate_fuzzy(g);
    const double target = std::log2(static_cast<double>(k));
    for (int i = 0; i < 300; ++i) {
        CHECK(m.weights.row(i).sum() == doctest::Approx(target).epsilon(1e-3));
        CHECK(m.weights(i, 0) == 1.0);  // nearest neighbor always saturates
    }
    CHECK(m.degenerate_points.empty());
}

TEST_CASE("equidistant neighbors fall back to the uniform solution") {
    // the origin's 4 neighbors all sit at distance 1 in 4-d
    Eigen::MatrixXd points = Eigen::MatrixXd::Zero(5, 4);
    for (int i = 0; i < 4; ++i) points(i + 1, i) = 1.0;
    const KnnGraph g = build_knn(points, 4);
    const DirectedMemberships m = calibrate_fuzzy(g);
    const double expected = std::log2(4.0) / 4.0;  // = 0.5
    for (int r = 0; r < 4; ++r) {
        CHECK(m.weights(0, r) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(m.weights.row(0).sum() == doctest::Approx(std::log2(4.0)));
}

TEST_CASE("all-zero distances are reported and set to weight one") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Zero(4, 3);  // 4 coincident points
    const KnnGraph g = build_knn(points, 2);
    const DirectedMemberships m = calibrate_fuzzy(g);
    CHECK(m.degenerate_points.size() == 4);
    CHECK(m.weights.minCoeff() == 1.0);
}

TEST_CASE("symmetrize applies the probabilistic union") {
    DirectedMemberships m;
    m.indices.resize(3, 1);
    m.weights.resize(3, 1);
    // 0 -> 1 (0.5), 1 -> 0 (0.5), 2 -> 0 (0.3); reverse of 2->0 absent
    m.indices << 1, 0, 0;
    m.weights << 0.5, 0.5, 0.3;
    const FuzzyGraph g = symmetrize(m);
    CHECK(g.weight_between(0, 1) == doctest::Approx(0.75));
    CHECK(g.weight_between(2, 0) == doctest::Approx(0.3));
    CHECK(g.weight_between(1, 2) == 0.0);

    m.weights << 1.0, 0.7, 0.3;  // absorbing element
    CHECK(symmetrize(m).weight_between(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("fuzzy graph stays symmetric with weights in (0,1]") {
    const Eigen::MatrixXd points = random_points(200, 6, 3);
    const FuzzyGraph g = symmetrize(calibrate_fuzzy(build_knn(points, 10)));
    for (const auto& e : g.edges) {
        CHECK(e.i < e.j);
        CHECK(e.weight > 0.0);
        CHECK(e.weight <= 1.0);
        CHECK(g.weight_between(e.i, e.j) == g.weight_between(e.j, e.i));
    }
}

TEST_CASE("supervise scales only cross-class edges") {
    FuzzyGraph g;
    g.n = 4;
    g.edges = {{0, 1, 0.8}, {0, 2, 0.8}, {2, 3, 0.6}};
    const std::vector<int> labels = {0, 0, 1, 1};

    const FuzzyGraph same = supervise(g, labels, 0.0);
    REQUIRE(same.edges.size() == 3);
    CHECK(same.weight_between(0, 2) == doctest::Approx(0.8));

    const FuzzyGraph half = supervise(g, labels, 0.5);
    CHECK(half.weight_between(0, 1) == doctest::Approx(0.8));  // same class
    CHECK(half.weight_between(0, 2) == doctest::Approx(0.4));  // cross class
    CHECK(half.weight_between(2, 3) == doctest::Approx(0.6));

    const FuzzyGraph full = supervise(g, labels, 1.0);
    CHECK(full.weight_between(0, 2) == 0.0);  // dropped
    CHECK(full.edges.size() == 2);

    CHECK_THROWS_AS(supervise(g, {0, 0, 1}, 0.5), DataError);
    CHECK_THROWS_AS(supervise(g, {0, 0, 1, -1}, 0.5), DataError);
}

TEST_CASE("anchored init is exact at zero noise") {
    const AnchorTable anchors = AnchorTable::builtin();
    const EmbeddingLayout layout = init_anchored(
        {"a", "b"}, {"Angry", "Neutral"}, anchors, 0.0, 7);
    CHECK(layout.coords(0, 0) == -0.51);
    CHECK(layout.coords(0, 1) == 0.59);
    CHECK(layout.coords(0, 2) == 0.25);
    CHECK(layout.coords(1, 0) == 0.0);
    CHECK(layout.coords(1, 1) == 0.0);
    CHECK(layout.coords(1, 2) == 0.0);

    CHECK_THROWS_WITH_AS(
        init_anchored({"a"}, {"Bored"}, anchors, 0.0, 7),
        doctest::Contains("Bored"), DataError);
}

TEST_CASE("anchored init noise is unbiased at the 3-sigma level") {
    const AnchorTable anchors = AnchorTable::builtin();
    const int n = 10000;
    const double sigma = 0.01;
    const std::vector<std::string> ids(n, "x");
    const std::vector<std::string> labels(n, "Angry");
    const EmbeddingLayout layout = init_anchored(ids, labels, anchors, sigma, 1);
    const Pad anchor = anchors.at("Angry");
    const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(n));
    for (int d = 0; d < 3; ++d) {
        CHECK(std::abs(layout.coords.col(d).mean() - anchor(d)) < bound);
    }
}

TEST_CASE("kernel fit matches the min_dist target curve") {
    const KernelParams p = fit_kernel(0.1);
    // expected neighborhood from the reference fit
    CHECK(p.a == doctest::Approx(1.58).epsilon(0.15));
    CHECK(p.b == doctest::Approx(0.90).epsilon(0.12));

    double max_dev = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double d = 3.0 * i / 299.0;
        const double target = d <= 0.1 ? 1.0 : std::exp(-(d - 0.1));
        max_dev = std::max(max_dev, std::abs(p.at(d) - target));
    }
    CHECK(max_dev < 0.05);

    CHECK(p.at(0.0) == 1.0);
    CHECK(KernelParams{3.7, 1.4}.at(0.0) == 1.0);

    const KernelParams wide = fit_kernel(0.5);
    CHECK(wide.a < p.a);  // larger min_dist relaxes the kernel

    CHECK_THROWS_AS(fit_kernel(0.0), DataError);
}

TEST_CASE("optimize_layout with zero epochs returns the input") {
    const LabeledPoints set = clustered_embeddings({"Angry", "Sad"}, 30, 2);
    const FuzzyGraph graph = supervise(
        symmetrize(calibrate_fuzzy(build_knn(set.points, 5))), set.label_ids,
        0.5);
    const EmbeddingLayout init = init_anchored(
        set.ids, set.labels, AnchorTable::builtin(), 0.01, 7);
    ReductionConfig cfg = default_reduction();
    cfg.k = 5;
    cfg.epochs = 0;
    const EmbeddingLayout out = optimize_layout(
        graph, init, AnchorTable::builtin(), fit_kernel(0.1), cfg);
    CHECK(out.coords == init.coords);
}

TEST_CASE("single-class optimization stays anchored") {
    // all points identical in 128-d
    Eigen::MatrixXd points = Eigen::MatrixXd::Zero(200, 128);
    const std::vector<std::string> labels(200, "Happy");
    std::vector<std::string> ids;
    std::vector<int> label_ids(200, 0);
    for (int i = 0; i < 200; ++i) ids.push_back("c" + std::to_string(i));

    const FuzzyGraph graph = supervise(
        symmetrize(calibrate_fuzzy(build_knn(points, 20))), label_ids, 0.5);
    const EmbeddingLayout init =
        init_anchored(ids, labels, AnchorTable::builtin(), 0.01, 7);
    const ReductionConfig cfg = default_reduction();
    const EmbeddingLayout out = optimize_layout(
        graph, init, AnchorTable::builtin(), fit_kernel(cfg.min_dist), cfg);

    const Pad anchor = AnchorTable::builtin().at("Happy");
    const double drift = (out.centroid("Happy") - anchor).norm();
    CHECK(drift < 0.1);   // the worked example
    CHECK(drift < 0.5);   // the stability invariant
}

TEST_CASE("five-class layout lands on its anchors") {
    const std::vector<std::string> esd = {"Neutral", "Angry", "Happy", "Sad",
                                          "Surprise"};
    const LabeledPoints set = clustered_embeddings(esd, 60, 7);
    const ReductionConfig cfg = default_reduction();
    const FuzzyGraph graph = supervise(
        symmetrize(calibrate_fuzzy(build_knn(set.points, cfg.k))),
        set.label_ids, cfg.supervision_weight);
    const EmbeddingLayout init = init_anchored(
        set.ids, set.labels, AnchorTable::builtin(), cfg.anchor_noise_sigma,
        cfg.seed);
    const EmbeddingLayout out = optimize_layout(
        graph, init, AnchorTable::builtin(), fit_kernel(cfg.min_dist), cfg);

    const AnchorTable anchors = AnchorTable::builtin();
    double within = 0.0;
    int within_n = 0;
    std::vector<Pad> cents;
    for (const auto& label : esd) {
        const Pad c = out.centroid(label);
        cents.push_back(c);
        CHECK((c - anchors.at(label)).norm() < 0.3);
    }
    for (int i = 0; i < out.size(); ++i) {
        for (int j = i + 1; j < out.size(); ++j) {
            if (out.labels[static_cast<std::size_t>(i)] ==
                out.labels[static_cast<std::size_t>(j)]) {
                within += (out.coords.row(i) - out.coords.row(j)).norm();
                ++within_n;
            }
        }
    }
    double cross = 0.0;
    int cross_n = 0;
    for (std::size_t i = 0; i < cents.size(); ++i) {
        for (std::size_t j = i + 1; j < cents.size(); ++j) {
            cross += (cents[i] - cents[j]).norm();
            ++cross_n;
        }
    }
    CHECK(within / within_n < cross / cross_n);
}

TEST_CASE("optimization is deterministic") {
    const LabeledPoints set = clustered_embeddings({"Angry", "Relaxed"}, 40, 4);
    ReductionConfig cfg = default_reduction();
    cfg.k = 10;
    cfg.epochs = 100;
    const FuzzyGraph graph = supervise(
        symmetrize(calibrate_fuzzy(build_knn(set.points, cfg.k))),
        set.label_ids, cfg.supervision_weight);
    const EmbeddingLayout init = init_anchored(
        set.ids, set.labels, AnchorTable::builtin(), cfg.anchor_noise_sigma,
        cfg.seed);
    const KernelParams kernel = fit_kernel(cfg.min_dist);
    const EmbeddingLayout a =
        optimize_layout(graph, init, AnchorTable::builtin(), kernel, cfg);
    const EmbeddingLayout b =
        optimize_layout(graph, init, AnchorTable::builtin(), kernel, cfg);
    CHECK(a.coords == b.coords);
}

TEST_CASE("layout file round-trip") {
    TempDir dir("layout");
    EmbeddingLayout layout;
    layout.clip_ids = {"a", "b"};
    layout.labels = {"Angry", "Sad"};
    layout.coords.resize(2, 3);
    layout.coords << -0.51, 0.59, 0.25, -0.63, -0.27, -0.33;
    save_layout(dir.file("l.csv"), layout);
    CHECK(testsupport::read_text(dir.file("l.csv")).rfind(
              "clip_id,label,P,A,D\n", 0) == 0);
    const EmbeddingLayout back = load_layout(dir.file("l.csv"));
    CHECK(back.clip_ids == layout.clip_ids);
    CHECK(back.labels == layout.labels);
    CHECK((back.coords - layout.coords).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reduction config validation") {
    ReductionConfig cfg;
    CHECK_NOTHROW(cfg.validate(100));
    CHECK_THROWS_AS(cfg.validate(20), DataError);  // k >= N
    cfg.k = 1;
    CHECK_THROWS_AS(cfg.validate(100), DataError);
    cfg = {};
    cfg.min_dist = 0;
    CHECK_THROWS_AS(cfg.validate(100), DataError);
    cfg = {};
    cfg.supervision_weight = 1.5;
    CHECK_THROWS_AS(cfg.validate(100), DataError);
}
