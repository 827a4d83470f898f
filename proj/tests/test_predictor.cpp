#include <doctest.h>

#include <cmath>

#include "padspace/error.hpp"
#include "padspace/predictor.hpp"
#include "padspace/rng.hpp"
#include "support/helpers.hpp"

using namespace padspace;
using testsupport::TempDir;

namespace {

/// Small hand-built predictor: random 128-d embeddings with layout rows
/// inside [-1,1]^3. The classifier is an untrained placeholder.
EdPredictor toy_predictor(int n, std::uint64_t seed, int k_pred) {
    EdPredictor pred;
    pred.model = init_model(kFeatureDims, LabelRegistry({"A", "B"}),
                            InputNormalizer::identity(kFeatureDims), seed);
    pred.embeddings.resize(n, kEmbedDim);
    pred.layout.coords.resize(n, 3);
    Rng rng(seed, 55);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < kEmbedDim; ++d) {
            pred.embeddings(i, d) = rng.normal(0, 1);
        }
        for (int d = 0; d < 3; ++d) {
            pred.layout.coords(i, d) = rng.uniform(-0.9, 0.9);
        }
        pred.layout.clip_ids.push_back("clip" + std::to_string(i));
        pred.layout.labels.push_back(i % 2 == 0 ? "A" : "B");
    }
    pred.anchors = AnchorTable::builtin();
    pred.k_pred = k_pred;
    return pred;
}

}  // namespace

TEST_CASE("pad clamping") {
    const PadVector pad = control_ed(2.0, 0.0, -3.0);
    CHECK(pad.pleasure == 1.0);
    CHECK(pad.arousal == 0.0);
    CHECK(pad.dominance == -1.0);
    CHECK_THROWS_AS(control_ed(std::nan(""), 0, 0), DataError);
}

TEST_CASE("control_ed returns Table-exact anchors for all ten labels") {
    const AnchorTable anchors = AnchorTable::builtin();
    for (const auto& [label, pad] : anchors.entries()) {
        const PadVector out = control_ed(anchors, label);
        CHECK(out.pleasure == pad(0));
        CHECK(out.arousal == pad(1));
        CHECK(out.dominance == pad(2));
    }
    const PadVector happy = control_ed(anchors, "Happy");
    CHECK(happy.pleasure == 0.81);
    CHECK(happy.arousal == 0.51);
    CHECK(happy.dominance == 0.46);
    const PadVector relaxed = control_ed(anchors, "Relaxed");
    CHECK(relaxed.pleasure == 0.68);
    CHECK(relaxed.arousal == -0.46);
    CHECK(relaxed.dominance == 0.20);
}

TEST_CASE("control_ed lists available labels on a miss") {
    CHECK_THROWS_WITH_AS(control_ed(AnchorTable::builtin(), "Bored"),
                         doctest::Contains("Neutral"), DataError);
}

TEST_CASE("a training embedding returns its own layout row") {
    const EdPredictor pred = toy_predictor(50, 3, 10);
    for (int i : {0, 17, 49}) {
        const PadVector out =
            predict_ed_from_embedding(pred, pred.embeddings.row(i).transpose());
        CHECK(std::abs(out.pleasure - pred.layout.coords(i, 0)) < 1e-6);
        CHECK(std::abs(out.arousal - pred.layout.coords(i, 1)) < 1e-6);
        CHECK(std::abs(out.dominance - pred.layout.coords(i, 2)) < 1e-6);
    }
}

TEST_CASE("an equidistant query lands on the midpoint") {
    EdPredictor pred = toy_predictor(2, 5, 2);
    Eigen::VectorXd u(kEmbedDim);
    Rng rng(9, 1);
    for (int d = 0; d < kEmbedDim; ++d) u(d) = rng.normal(0, 1);
    pred.embeddings.row(0) = u.transpose();
    pred.embeddings.row(1) = -u.transpose();
    const PadVector out =
        predict_ed_from_embedding(pred, Eigen::VectorXd::Zero(kEmbedDim));
    const Pad mid =
        0.5 * (pred.layout.coords.row(0) + pred.layout.coords.row(1));
    CHECK(out.pleasure == doctest::Approx(mid(0)).epsilon(1e-12));
    CHECK(out.arousal == doctest::Approx(mid(1)).epsilon(1e-12));
    CHECK(out.dominance == doctest::Approx(mid(2)).epsilon(1e-12));
}

TEST_CASE("predictions stay in the PAD cube and the neighbor hull") {
    const EdPredictor pred = toy_predictor(80, 11, 8);
    Rng rng(23, 2);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd q(kEmbedDim);
        for (int d = 0; d < kEmbedDim; ++d) q(d) = rng.normal(0, 1.5);
        const PadVector out = predict_ed_from_embedding(pred, q);
        CHECK(out.pleasure >= -1.0);
        CHECK(out.pleasure <= 1.0);
        CHECK(out.arousal >= -1.0);
        CHECK(out.arousal <= 1.0);
        CHECK(out.dominance >= -1.0);
        CHECK(out.dominance <= 1.0);

        // convexity: inside the axis-aligned bounding box of the k nearest
        std::vector<std::pair<double, int>> cand;
        for (int i = 0; i < pred.size(); ++i) {
            cand.emplace_back(
                (q.transpose() - pred.embeddings.row(i)).squaredNorm(), i);
        }
        std::sort(cand.begin(), cand.end());
        Pad lo = Pad::Constant(2), hi = Pad::Constant(-2);
        for (int r = 0; r < pred.k_pred; ++r) {
            const Pad row =
                pred.layout.coords.row(cand[static_cast<std::size_t>(r)].second)
                    .transpose();
            lo = lo.cwiseMin(row);
            hi = hi.cwiseMax(row);
        }
        const Pad v = out.as_eigen();
        for (int d = 0; d < 3; ++d) {
            CHECK(v(d) >= lo(d) - 1e-12);
            CHECK(v(d) <= hi(d) + 1e-12);
        }
    }
}

TEST_CASE("continuity across nearby queries with a shared neighbor set") {
    const EdPredictor pred = toy_predictor(60, 13, 6);
    Rng rng(29, 3);
    Eigen::VectorXd q(kEmbedDim);
    for (int d = 0; d < kEmbedDim; ++d) q(d) = rng.normal(0, 1.2);
    Eigen::VectorXd q2 = q;
    q2(0) += 1e-8;
    const PadVector a = predict_ed_from_embedding(pred, q);
    const PadVector b = predict_ed_from_embedding(pred, q2);
    CHECK(std::abs(a.pleasure - b.pleasure) < 1e-4);
    CHECK(std::abs(a.arousal - b.arousal) < 1e-4);
    CHECK(std::abs(a.dominance - b.dominance) < 1e-4);
}

TEST_CASE("nearest_exemplars identity, ordering, and tie-breaking") {
    EdPredictor pred = toy_predictor(30, 17, 5);
    const Pad row0 = pred.layout.coords.row(0).transpose();
    const auto top = nearest_exemplars(pred, PadVector::from(row0), 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].clip_id == "clip0");
    CHECK(top[0].distance == 0.0);

    const auto all = nearest_exemplars(pred, control_ed(0, 0, 0), 30);
    REQUIRE(all.size() == 30);
    for (std::size_t i = 1; i < all.size(); ++i) {
        CHECK(all[i].distance >= all[i - 1].distance);
    }

    // duplicate rows tie; the lower index wins
    pred.layout.coords.row(7) = pred.layout.coords.row(3);
    const auto tied = nearest_exemplars(
        pred, PadVector::from(pred.layout.coords.row(3).transpose()), 2);
    CHECK(tied[0].clip_id == "clip3");
    CHECK(tied[1].clip_id == "clip7");

    CHECK_THROWS_AS(nearest_exemplars(pred, control_ed(0, 0, 0), 0), DataError);
    CHECK_THROWS_AS(nearest_exemplars(pred, control_ed(0, 0, 0), 31), DataError);
}

TEST_CASE("predictor bundle round-trips through its directory") {
    TempDir dir("bundle");
    const EdPredictor pred = toy_predictor(25, 19, 7);
    save_predictor(dir.str(), pred);
    const EdPredictor back = load_predictor(dir.str());
    CHECK(back.k_pred == pred.k_pred);
    CHECK(back.embeddings == pred.embeddings);  // full-precision store
    CHECK(back.layout.clip_ids == pred.layout.clip_ids);
    CHECK(back.layout.labels == pred.layout.labels);
    CHECK((back.layout.coords - pred.layout.coords).cwiseAbs().maxCoeff() <
          1e-5);
    CHECK(back.anchors.entries().size() == pred.anchors.entries().size());

    // embedding identity survives the round-trip bit-exactly
    const PadVector out =
        predict_ed_from_embedding(back, back.embeddings.row(4).transpose());
    CHECK(std::abs(out.pleasure - back.layout.coords(4, 0)) < 1e-9);
}

TEST_CASE("bundle loading rejects inconsistent files") {
    TempDir dir("badbundle");
    const EdPredictor pred = toy_predictor(10, 23, 3);
    save_predictor(dir.str(), pred);
    // swap in a layout with a missing row
    EmbeddingLayout trimmed = pred.layout;
    trimmed.clip_ids.pop_back();
    trimmed.labels.pop_back();
    trimmed.coords.conservativeResize(9, 3);
    save_layout(dir.file("layout.csv"), trimmed);
    CHECK_THROWS_AS(load_predictor(dir.str()), DataError);
}
