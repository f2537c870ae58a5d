#include "polarkit/o2o_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarkit/errors.hpp"
#include "polarkit/numfmt.hpp"
#include "polarkit/rng.hpp"

namespace polarkit {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

std::vector<double> matvec(const MatrixD& m, std::span<const double> x) {
    require(m.cols() == x.size(), "matrix/vector size mismatch");
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

MatrixD random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    MatrixD m(rows, cols);
    for (auto& v : m.data()) v = round_sig9(rng.uniform(-scale, scale));
    return m;
}

Dense random_dense(Rng& rng, std::size_t in, std::size_t out, double scale) {
    Dense d{random_matrix(rng, out, in, scale), std::vector<double>(out)};
    for (auto& b : d.bias) b = round_sig9(rng.uniform(-scale, scale));
    return d;
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> Dense::apply(std::span<const double> x) const {
    auto y = matvec(weight, x);
    require(bias.size() == y.size(), "bias size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias[i];
    return y;
}

std::vector<double> Mlp::apply(std::span<const double> x) const {
    require(!layers.empty(), "empty MLP");
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        h = layers[l].apply(h);
        if (l + 1 < layers.size())
            for (auto& v : h) v = std::max(v, 0.0);
    }
    return h;
}

HeadDims HeadWeights::dims() const { return {level_weights.cols(), pool.cols() / std::max<std::size_t>(level_weights.cols(), 1), pool.rows(), w_in.rows()}; }

void HeadWeights::validate() const {
    const HeadDims d = dims();
    require(level_weights.rows() == 3 && d.n_points >= 2, "level weights must be 3 x N with N >= 2");
    require(d.channels >= 1 && pool.cols() == d.n_points * d.channels, "pool matrix must have N * C_f columns");
    require(d.d_r >= 1 && d.d_n >= 1, "d_r and d_n must be positive");
    require(roi.in_dim() == d.d_r && roi.out_dim() == d.d_r && roi.bias.size() == d.d_r, "roi layer must be d_r -> d_r");
    require(w_in.cols() == d.d_r && w_out.rows() == d.d_n && w_out.cols() == d.d_r, "W_in/W_out must be d_n x d_r");
    require(sample.in_dim() == d.n_points && sample.out_dim() == d.d_n && sample.bias.size() == d.d_n,
            "sample layer must be N -> d_n");
    require(edge.layers.size() == 2 && edge.layers.front().in_dim() == d.d_n && edge.layers.back().out_dim() == d.d_n,
            "edge MLP must be two layers d_n -> d_n");
    require(node.layers.size() == 3 && node.layers.front().in_dim() == d.d_n && node.layers.back().out_dim() == 1,
            "node MLP must be three layers d_n -> 1");
    for (std::size_t l = 0; l + 1 < edge.layers.size(); ++l)
        require(edge.layers[l].out_dim() == edge.layers[l + 1].in_dim(), "edge MLP layer sizes do not chain");
    for (std::size_t l = 0; l + 1 < node.layers.size(); ++l)
        require(node.layers[l].out_dim() == node.layers[l + 1].in_dim(), "node MLP layer sizes do not chain");
}

HeadWeights random_head_weights(const HeadDims& dims, std::uint64_t seed, double scale) {
    Rng rng(seed);
    HeadWeights w;
    w.level_weights = random_matrix(rng, 3, dims.n_points, scale);
    w.pool = random_matrix(rng, dims.d_r, dims.n_points * dims.channels, scale);
    w.roi = random_dense(rng, dims.d_r, dims.d_r, scale);
    w.w_in = random_matrix(rng, dims.d_n, dims.d_r, scale);
    w.w_out = random_matrix(rng, dims.d_n, dims.d_r, scale);
    w.sample = random_dense(rng, dims.n_points, dims.d_n, scale);
    w.edge.layers = {random_dense(rng, dims.d_n, dims.d_n, scale), random_dense(rng, dims.d_n, dims.d_n, scale)};
    w.node.layers = {random_dense(rng, dims.d_n, dims.d_n, scale), random_dense(rng, dims.d_n, dims.d_n, scale),
                     random_dense(rng, dims.d_n, 1, scale)};
    return w;
}

MatrixD aggregate_levels(const LevelFeatures& levels, const MatrixD& level_weights) {
    const std::size_t n = levels[0].rows();
    const std::size_t c = levels[0].cols();
    for (const auto& l : levels) require(l.rows() == n && l.cols() == c, "level feature shapes differ");
    require(level_weights.rows() == 3 && level_weights.cols() == n, "level weights must be 3 x N");

    MatrixD out(n, c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::max({level_weights(0, i), level_weights(1, i), level_weights(2, i)});
        std::array<double, 3> e{};
        double z = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            e[k] = std::exp(level_weights(k, i) - m);
            z += e[k];
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const double a = e[k] / z;
            for (std::size_t ch = 0; ch < c; ++ch) out(i, ch) += a * levels[k](i, ch);
        }
    }
    return out;
}

std::vector<double> roi_project(const MatrixD& aggregated, const MatrixD& pool) {
    require(pool.cols() == aggregated.rows() * aggregated.cols(), "pool matrix columns must equal N * C_f");
    return matvec(pool, aggregated.data());
}

EdgeTensor edge_tensor(const MatrixD& rois, const MatrixD& xs, const HeadWeights& weights) {
    const std::size_t k = rois.rows();
    require(xs.rows() == k, "rois and xs disagree on K");
    require(xs.cols() == weights.sample.in_dim(), "xs width must equal N");
    const std::size_t d_n = weights.w_in.rows();

    std::vector<std::vector<double>> in_proj(k), out_proj(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto hidden = weights.roi.apply(rois.row(i));
        for (auto& v : hidden) v = std::max(v, 0.0);
        in_proj[i] = matvec(weights.w_in, hidden);
        out_proj[i] = matvec(weights.w_out, hidden);
    }

    EdgeTensor edge(k, d_n);
    std::vector<double> dx(xs.cols());
    std::vector<double> pre(d_n);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t t = 0; t < dx.size(); ++t) dx[t] = xs(j, t) - xs(i, t);
            const auto s = weights.sample.apply(dx);
            for (std::size_t c = 0; c < d_n; ++c) pre[c] = in_proj[j][c] - out_proj[i][c] + s[c];
            const auto out = weights.edge.apply(pre);
            require(out.size() == d_n, "edge MLP output must be d_n");
            std::copy(out.begin(), out.end(), edge.at(i, j).begin());
        }
    }
    return edge;
}

MatrixD masked_max_pool(const EdgeTensor& edge, const BinaryMatrix& adjacency) {
    const std::size_t k = edge.size();
    require(adjacency.rows() == k && adjacency.cols() == k, "adjacency does not match edge tensor");
    MatrixD pooled(k, edge.depth(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        bool any = false;
        auto out = pooled.row(j);
        for (std::size_t i = 0; i < k; ++i) {
            if (!adjacency(i, j)) continue;
            const auto e = edge.at(i, j);
            for (std::size_t c = 0; c < e.size(); ++c) out[c] = any ? std::max(out[c], e[c]) : e[c];
            any = true;
        }
    }
    return pooled;
}

std::vector<double> node_scores(const MatrixD& pooled, const Mlp& node_mlp) {
    std::vector<double> scores(pooled.rows());
    for (std::size_t j = 0; j < pooled.rows(); ++j) {
        const auto out = node_mlp.apply(pooled.row(j));
        require(out.size() == 1, "node MLP must end in a single output");
        scores[j] = sigmoid(out[0]);
    }
    return scores;
}

HeadOutput head_forward(const HeadInput& input, const SuppressionThresholds& th, const HeadWeights& weights) {
    weights.validate();
    const std::size_t k = input.level_feats.size();
    if (k == 0) throw ShapeError("head needs at least one candidate");
    if (input.scores.size() != k || input.anchors.size() != k || input.anchor_xs.rows() != k)
        throw ShapeError("head inputs disagree on K (" + std::to_string(k) + ")");

    const HeadDims d = weights.dims();
    HeadOutput out;
    out.rois = MatrixD(k, d.d_r);
    for (std::size_t j = 0; j < k; ++j) {
        const auto roi = roi_project(aggregate_levels(input.level_feats[j], weights.level_weights), weights.pool);
        std::copy(roi.begin(), roi.end(), out.rois.row(j).begin());
    }
    out.adjacency =
        elementwise_and(confidence_adjacency(input.scores), geometric_adjacency(input.anchors, th));
    const EdgeTensor edge = edge_tensor(out.rois, input.anchor_xs, weights);
    out.o2o_scores = node_scores(masked_max_pool(edge, out.adjacency), weights.node);
    return out;
}

}  // namespace polarkit
