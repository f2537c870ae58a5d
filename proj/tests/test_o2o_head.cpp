#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "polarkit/errors.hpp"
#include "polarkit/harness.hpp"
#include "polarkit/o2o_head.hpp"
#include "polarkit/rng.hpp"

using namespace polarkit;

namespace {

MatrixD random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    MatrixD m(r, c);
    for (auto& v : m.data()) v = rng.uniform(-1, 1);
    return m;
}

LevelFeatures random_levels(Rng& rng, std::size_t n, std::size_t c) {
    return {random_matrix(rng, n, c), random_matrix(rng, n, c), random_matrix(rng, n, c)};
}

HeadInput random_input(Rng& rng, std::size_t k, const HeadDims& d) {
    HeadInput in;
    in.anchor_xs = MatrixD(k, d.n_points);
    const Pole pole = default_global_pole({});
    for (std::size_t i = 0; i < k; ++i) {
        in.level_feats.push_back(random_levels(rng, d.n_points, d.channels));
        for (auto& x : in.anchor_xs.row(i)) x = rng.uniform(0, 800);
        in.scores.push_back(rng.uniform());
        in.anchors.push_back({rng.uniform(-0.15, 0.15), rng.uniform(-40, 40), pole});
    }
    return in;
}

}  // namespace

TEST(AggregateLevels, ConvexCombination) {
    Rng rng(1);
    const auto m = random_matrix(rng, 6, 3);
    const LevelFeatures same{m, m, m};
    const auto w = random_matrix(rng, 3, 6);
    const auto out = aggregate_levels(same, w);
    for (std::size_t i = 0; i < m.data().size(); ++i) EXPECT_NEAR(out.data()[i], m.data()[i], 1e-12);

    const LevelFeatures lv = random_levels(rng, 6, 3);
    MatrixD big(3, 6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) big(0, i) = 1000.0;
    const auto sat = aggregate_levels(lv, big);
    for (std::size_t i = 0; i < sat.data().size(); ++i) EXPECT_NEAR(sat.data()[i], lv[0].data()[i], 1e-12);

    const auto mean = aggregate_levels(lv, MatrixD(3, 6, 0.25));
    for (std::size_t i = 0; i < mean.data().size(); ++i)
        EXPECT_NEAR(mean.data()[i], (lv[0].data()[i] + lv[1].data()[i] + lv[2].data()[i]) / 3.0, 1e-12);

    EXPECT_THROW(aggregate_levels(lv, MatrixD(3, 5)), ShapeError);
}

TEST(RoiProject, Linear) {
    Rng rng(2);
    const auto pool = random_matrix(rng, 4, 12);
    const auto zero = roi_project(MatrixD(6, 2, 0.0), pool);
    for (double v : zero) EXPECT_EQ(v, 0.0);

    MatrixD sel(2, 12, 0.0);
    sel(0, 3) = 1.0;
    sel(1, 10) = 1.0;
    const auto a = random_matrix(rng, 6, 2);
    const auto picked = roi_project(a, sel);
    EXPECT_EQ(picked[0], a.data()[3]);
    EXPECT_EQ(picked[1], a.data()[10]);

    const auto b = random_matrix(rng, 6, 2);
    MatrixD ab = a;
    for (std::size_t i = 0; i < ab.data().size(); ++i) ab.data()[i] += b.data()[i];
    const auto fa = roi_project(a, pool), fb = roi_project(b, pool), fab = roi_project(ab, pool);
    for (std::size_t i = 0; i < fab.size(); ++i) EXPECT_NEAR(fab[i], fa[i] + fb[i], 1e-12);

    EXPECT_THROW(roi_project(a, MatrixD(4, 11)), ShapeError);
}

TEST(EdgeTensor, IdenticalCandidatesCancel) {
    HeadDims d;
    d.n_points = 8;
    auto w = random_head_weights(d, 3);
    w.w_out = w.w_in;
    Rng rng(4);
    const auto roi = random_matrix(rng, 1, d.d_r);
    MatrixD rois(2, d.d_r);
    std::copy(roi.data().begin(), roi.data().end(), rois.row(0).begin());
    std::copy(roi.data().begin(), roi.data().end(), rois.row(1).begin());
    MatrixD xs(2, d.n_points, 17.0);
    const auto e = edge_tensor(rois, xs, w);
    const auto expect = w.edge.apply(w.sample.bias);
    for (std::size_t c = 0; c < d.d_n; ++c) {
        EXPECT_NEAR(e.at(0, 1)[c], expect[c], 1e-15);
        EXPECT_NEAR(e.at(1, 0)[c], expect[c], 1e-15);
    }

    const auto one = edge_tensor(MatrixD(1, d.d_r, 0.5), MatrixD(1, d.n_points, 1.0), w);
    EXPECT_EQ(one.size(), 1u);
    EXPECT_EQ(one.depth(), d.d_n);
}

TEST(EdgeTensor, PairLocality) {
    HeadDims d;
    d.n_points = 8;
    const auto w = random_head_weights(d, 5);
    Rng rng(6);
    auto rois = random_matrix(rng, 5, d.d_r);
    auto xs = random_matrix(rng, 5, d.n_points);
    const auto before = edge_tensor(rois, xs, w);
    for (auto& v : rois.row(4)) v += 0.3;
    for (auto& v : xs.row(4)) v -= 2.0;
    const auto after = edge_tensor(rois, xs, w);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t c = 0; c < d.d_n; ++c) EXPECT_EQ(before.at(i, j)[c], after.at(i, j)[c]);
}

TEST(MaskedMaxPool, Semantics) {
    EdgeTensor e(3, 2);
    e.at(0, 2)[0] = 1.0;
    e.at(0, 2)[1] = 5.0;
    e.at(1, 2)[0] = 3.0;
    e.at(1, 2)[1] = -2.0;
    e.at(2, 1)[0] = -4.0;
    e.at(2, 1)[1] = -6.0;

    const auto zeros = masked_max_pool(e, BinaryMatrix(3, 3, 0));
    for (double v : zeros.data()) EXPECT_EQ(v, 0.0);

    BinaryMatrix a(3, 3, 0);
    a(2, 1) = 1;
    a(0, 2) = 1;
    a(1, 2) = 1;
    const auto p = masked_max_pool(e, a);
    EXPECT_EQ(p(0, 0), 0.0);
    EXPECT_EQ(p(1, 0), -4.0);
    EXPECT_EQ(p(1, 1), -6.0);
    EXPECT_EQ(p(2, 0), 3.0);
    EXPECT_EQ(p(2, 1), 5.0);
}

TEST(NodeScores, Properties) {
    HeadDims d;
    auto w = random_head_weights(d, 9);
    Mlp zero = w.node;
    for (auto& l : zero.layers)
        for (auto& v : l.weight.data()) v = 0.0;
    Rng rng(10);
    const auto pooled = random_matrix(rng, 4, d.d_n);
    for (double s : node_scores(pooled, zero)) EXPECT_DOUBLE_EQ(s, sigmoid(zero.layers.back().bias[0]));

    MatrixD twin(2, d.d_n);
    for (std::size_t c = 0; c < d.d_n; ++c) twin(0, c) = twin(1, c) = pooled(0, c);
    const auto s = node_scores(twin, w.node);
    EXPECT_EQ(s[0], s[1]);
    for (double v : node_scores(pooled, w.node)) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(HeadForward, SingleCandidate) {
    HeadDims d;
    const auto w = random_head_weights(d, 1);
    Rng rng(11);
    const auto in = random_input(rng, 1, d);
    const auto out = head_forward(in, {}, w);
    ASSERT_EQ(out.o2o_scores.size(), 1u);
    EXPECT_EQ(out.adjacency(0, 0), 0);
    // No in-edges: the pooled vector is zero.
    EXPECT_DOUBLE_EQ(out.o2o_scores[0], node_scores(MatrixD(1, d.d_n, 0.0), w.node)[0]);
}

TEST(HeadForward, DuplicateDirection) {
    HeadDims d;
    const auto w = random_head_weights(d, 2);
    Rng rng(12);
    auto in = random_input(rng, 2, d);
    in.anchors[1] = in.anchors[0];
    in.scores = {0.9, 0.6};
    const auto out = head_forward(in, {}, w);
    EXPECT_EQ(out.adjacency(0, 1), 1);
    EXPECT_EQ(out.adjacency(1, 0), 0);
    EXPECT_DOUBLE_EQ(out.o2o_scores[0], node_scores(MatrixD(1, d.d_n, 0.0), w.node)[0]);
    const auto edge = edge_tensor(out.rois, in.anchor_xs, w);
    MatrixD pooled(1, d.d_n);
    std::copy(edge.at(0, 1).begin(), edge.at(0, 1).end(), pooled.row(0).begin());
    bool nonzero = false;
    for (double v : pooled.data()) nonzero |= v != 0.0;
    EXPECT_TRUE(nonzero);
    EXPECT_DOUBLE_EQ(out.o2o_scores[1], node_scores(pooled, w.node)[0]);
}

TEST(HeadForward, MaskingLocality) {
    HeadDims d;
    const auto w = random_head_weights(d, 3);
    Rng rng(13);
    const std::size_t k = 12;
    const auto in = random_input(rng, k, d);
    const auto base = head_forward(in, {}, w);
    for (std::size_t m = 0; m < k; ++m) {
        HeadInput p = in;
        for (auto& lvl : p.level_feats[m])
            for (auto& v : lvl.data()) v += rng.uniform(-1, 1);
        for (auto& v : p.anchor_xs.row(m)) v += rng.uniform(-20, 20);
        const auto out = head_forward(p, {}, w);
        for (std::size_t j = 0; j < k; ++j)
            if (j != m && !base.adjacency(m, j)) EXPECT_EQ(out.o2o_scores[j], base.o2o_scores[j]);
    }
}

TEST(HeadForward, ShapeChecks) {
    HeadDims d;
    auto w = random_head_weights(d, 4);
    Rng rng(14);
    auto in = random_input(rng, 3, d);
    in.scores.pop_back();
    EXPECT_THROW(head_forward(in, {}, w), ShapeError);
    w.node.layers.pop_back();
    EXPECT_THROW(w.validate(), ShapeError);
    EXPECT_THROW(head_forward({}, {}, random_head_weights(d, 4)), ShapeError);
}

TEST(HeadWeights, SeededAndDims) {
    HeadDims d;
    d.channels = 3;
    const auto a = random_head_weights(d, 42);
    const auto b = random_head_weights(d, 42);
    EXPECT_EQ(a.pool, b.pool);
    EXPECT_EQ(a.node.layers[2].bias, b.node.layers[2].bias);
    const HeadDims got = a.dims();
    EXPECT_EQ(got.n_points, d.n_points);
    EXPECT_EQ(got.channels, 3u);
    EXPECT_EQ(got.d_r, d.d_r);
    EXPECT_EQ(got.d_n, d.d_n);
    EXPECT_NO_THROW(a.validate());
}

TEST(SyntheticInput, MatchesCandidates) {
    const ImageFrame f;
    const auto gts = gen_scene(SceneSpec{});
    CandidateGenSpec cs;
    const auto cands = gen_candidates(gts, cs, default_global_pole(f));
    const auto in = synthetic_head_input(cands, 4, 1);
    ASSERT_EQ(in.level_feats.size(), cands.size());
    EXPECT_EQ(in.anchor_xs.cols(), f.n_rows);
    const auto out = head_forward(in, {}, random_head_weights({}, 7));
    EXPECT_EQ(out.o2o_scores.size(), cands.size());
}
