#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polarkit/errors.hpp"
#include "polarkit/suppression.hpp"

using namespace polarkit;

namespace {

Candidate vertical_candidate(double x, double score, double theta = 0.0, double radius = 0.0) {
    const ImageFrame f;
    Candidate c;
    c.anchor = {theta, radius, default_global_pole(f)};
    c.lane = make_lane(std::vector<double>(f.n_rows, x), 0, f.n_rows - 1, f);
    c.score_o2m = score;
    return c;
}

using Idx = std::vector<std::size_t>;

}  // namespace

TEST(ConfidenceAdjacency, Examples) {
    const std::vector<double> s{0.9, 0.5};
    const auto a = confidence_adjacency(s);
    EXPECT_EQ(a(0, 1), 1);
    EXPECT_EQ(a(1, 0), 0);
    EXPECT_EQ(a(0, 0), 0);

    const std::vector<double> eq{0.5, 0.5};
    const auto b = confidence_adjacency(eq);
    EXPECT_EQ(b(1, 0), 1);
    EXPECT_EQ(b(0, 1), 0);

    const std::vector<double> one{0.3};
    const auto c = confidence_adjacency(one);
    ASSERT_EQ(c.rows(), 1u);
    EXPECT_EQ(c(0, 0), 0);
}

TEST(ConfidenceAdjacency, StrictTotalOrder) {
    Rng rng(2);
    std::vector<double> s(40);
    for (auto& v : s) v = std::round(rng.uniform() * 5) / 5;  // plenty of ties
    const auto a = confidence_adjacency(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (i != j) EXPECT_EQ(a(i, j) + a(j, i), 1);
}

TEST(GeometricAdjacency, Examples) {
    const SuppressionThresholds th;
    const Pole p;
    const std::vector<PolarAnchor> same{{0.2, 5, p}, {0.2, 5, p}};
    const auto a = geometric_adjacency(same, th);
    for (auto v : a.data()) EXPECT_EQ(v, 1);

    const std::vector<PolarAnchor> edge{{0.0, 5, p}, {th.tau_theta, 5, p}};
    EXPECT_EQ(geometric_adjacency(edge, th)(0, 1), 0);

    const std::vector<PolarAnchor> near{{0.1, 5, p}, {0.1, 5 + th.lambda_g / 2, p}};
    const auto n = geometric_adjacency(near, th);
    EXPECT_EQ(n(0, 1), 1);
    EXPECT_EQ(n(1, 0), 1);
}

TEST(FastNms, SingleCandidate) {
    const CandidateSet c{vertical_candidate(100, 0.9)};
    EXPECT_EQ(fast_nms_geometric(c, {}, iou_distance(15)), Idx{0});
    const CandidateSet low{vertical_candidate(100, 0.2)};
    EXPECT_TRUE(fast_nms_geometric(low, {}, iou_distance(15)).empty());
}

TEST(FastNms, DuplicatesWithPrior) {
    const CandidateSet c{vertical_candidate(100, 0.7), vertical_candidate(102, 0.9)};
    EXPECT_EQ(fast_nms_geometric(c, {}, iou_distance(15)), Idx{1});
}

TEST(FastNms, GeometricPriorDisablesSuppression) {
    const SuppressionThresholds th;
    const CandidateSet c{vertical_candidate(100, 0.7, 0.0), vertical_candidate(102, 0.9, th.tau_theta)};
    EXPECT_EQ(fast_nms_geometric(c, th, iou_distance(15)), (Idx{0, 1}));
}

TEST(FastNms, ExactDuplicateEqualScores) {
    const CandidateSet c{vertical_candidate(100, 0.9), vertical_candidate(100, 0.9)};
    // Tie goes to the larger index.
    EXPECT_EQ(fast_nms_geometric(c, {}, iou_distance(15)), Idx{1});
    EXPECT_EQ(sequential_nms(c, iou_distance(15), 0.5, 0.48), Idx{1});
}

TEST(Nms, ChainOverSuppression) {
    const CandidateSet c{vertical_candidate(100, 0.9), vertical_candidate(110, 0.8), vertical_candidate(120, 0.7)};
    SuppressionThresholds th;
    th.tau_d = 0.6;
    const auto d = iou_distance(15);
    ASSERT_LT(d(c[0].lane, c[1].lane), th.tau_d);
    ASSERT_LT(d(c[1].lane, c[2].lane), th.tau_d);
    ASSERT_GE(d(c[0].lane, c[2].lane), th.tau_d);
    EXPECT_EQ(sequential_nms(c, d, th.tau_d, th.tau_o2m), (Idx{0, 2}));
    const BinaryMatrix ones(3, 3, 1);
    EXPECT_EQ(fast_nms_with_prior(c, ones, th, d), Idx{0});
}

TEST(Nms, DisjointLanesAllKept) {
    const CandidateSet c{vertical_candidate(100, 0.9), vertical_candidate(300, 0.8), vertical_candidate(500, 0.7)};
    EXPECT_EQ(sequential_nms(c, iou_distance(15), 0.5, 0.48), (Idx{0, 1, 2}));
    EXPECT_EQ(fast_nms_geometric(c, {}, iou_distance(15)), (Idx{0, 1, 2}));
}

TEST(Nms, MatchesReferenceFastNms) {
    const ImageFrame f;
    Rng rng(8);
    const SuppressionThresholds th;
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 1 + rng.below(40);
        const CandidateSet c = [&] {
            CandidateSet out;
            const auto base = oracle::random_lane(rng, f);
            for (std::size_t i = 0; i < k; ++i) {
                Candidate cand;
                cand.lane = oracle::jittered(rng, base, rng.uniform(-40, 40), 3.0);
                cand.score_o2m = rng.uniform();
                out.push_back(cand);
            }
            return out;
        }();
        const BinaryMatrix ones(k, k, 1);
        EXPECT_EQ(fast_nms_with_prior(c, ones, th, iou_distance(15)), oracle::reference_fast_nms(c, 15, th.tau_d, th.tau_o2m));
    }
}

TEST(FastNmsSurvivors, ShapeMismatch) {
    const std::vector<LaneGrid> lanes{vertical_candidate(1, 1).lane};
    EXPECT_THROW(fast_nms_survivors(lanes, BinaryMatrix(2, 2), 0.5, iou_distance(15)), ShapeError);
    EXPECT_THROW(elementwise_and(BinaryMatrix(2, 2), BinaryMatrix(1, 2)), ShapeError);
}

TEST(DualConfidence, Examples) {
    CandidateSet c{vertical_candidate(100, 0.9), vertical_candidate(300, 0.9)};
    c[0].score_o2o = 0.9;
    c[1].score_o2o = 0.1;
    EXPECT_EQ(dual_confidence_select(c, 0.46, 0.48), Idx{0});

    c[0].score_o2m = 0.1;
    EXPECT_TRUE(dual_confidence_select(c, 0.46, 0.48).empty());

    c[0].score_o2m = 0.9;
    c[0].score_o2o = 0.46;
    EXPECT_TRUE(dual_confidence_select(c, 0.46, 0.48).empty());

    c[1].score_o2o.reset();
    EXPECT_THROW(dual_confidence_select(c, 0.46, 0.48), MissingO2OScores);
}
