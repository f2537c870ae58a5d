#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "polarkit/geometry.hpp"
#include "polarkit/matrix.hpp"
#include "polarkit/suppression.hpp"

namespace polarkit {

struct Dense {
    MatrixD weight;  // out x in
    std::vector<double> bias;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    std::vector<double> apply(std::span<const double> x) const;
};

/// Linear layers with ReLU between them and no activation after the last one.
struct Mlp {
    std::vector<Dense> layers;

    std::vector<double> apply(std::span<const double> x) const;
};

struct HeadDims {
    std::size_t n_points = 36;  // N
    std::size_t channels = 4;   // C_f
    std::size_t d_r = 16;
    std::size_t d_n = 5;
};

struct HeadWeights {
    MatrixD level_weights;  // 3 x N
    MatrixD pool;           // d_r x (N * C_f)
    Dense roi;              // d_r -> d_r
    MatrixD w_in;           // d_n x d_r
    MatrixD w_out;          // d_n x d_r
    Dense sample;           // N -> d_n
    Mlp edge;               // d_n -> d_n -> d_n
    Mlp node;               // d_n -> d_n -> d_n -> 1, sigmoid applied by node_scores

    HeadDims dims() const;
    void validate() const;
};

/// Every parameter drawn uniformly from [-scale, scale], rounded to the file precision.
HeadWeights random_head_weights(const HeadDims& dims, std::uint64_t seed, double scale = 0.1);

/// K x K x d_n, indexed (i, j, c).
class EdgeTensor {
public:
    EdgeTensor() = default;
    EdgeTensor(std::size_t k, std::size_t d) : k_(k), d_(d), data_(k * k * d, 0.0) {}

    std::size_t size() const { return k_; }
    std::size_t depth() const { return d_; }
    std::span<double> at(std::size_t i, std::size_t j) { return {data_.data() + (i * k_ + j) * d_, d_}; }
    std::span<const double> at(std::size_t i, std::size_t j) const { return {data_.data() + (i * k_ + j) * d_, d_}; }

private:
    std::size_t k_ = 0;
    std::size_t d_ = 0;
    std::vector<double> data_;
};

using LevelFeatures = std::array<MatrixD, 3>;  // three N x C_f maps for one candidate

/// Softmax over the three levels per sample point, then a per-point convex combination.
MatrixD aggregate_levels(const LevelFeatures& levels, const MatrixD& level_weights);

/// Flatten row-major and apply the pooling matrix.
std::vector<double> roi_project(const MatrixD& aggregated, const MatrixD& pool);

/// D(i, j) = MLP_edge(W_in relu(W_roi F_j + b) - W_out relu(W_roi F_i + b) + W_s (x_j - x_i) + b_s).
EdgeTensor edge_tensor(const MatrixD& rois, const MatrixD& xs, const HeadWeights& weights);

/// Column-wise masked element max: row j is the max over {i : A(i, j) = 1} of D(i, j).
/// A column with no in-edges pools to zeros.
MatrixD masked_max_pool(const EdgeTensor& edge, const BinaryMatrix& adjacency);

std::vector<double> node_scores(const MatrixD& pooled, const Mlp& node_mlp);

struct HeadInput {
    std::vector<LevelFeatures> level_feats;  // per candidate
    MatrixD anchor_xs;                       // K x N, anchor-sampled (pre-regression)
    std::vector<double> scores;              // O2M confidences
    std::vector<PolarAnchor> anchors;
};

struct HeadOutput {
    MatrixD rois;  // K x d_r
    BinaryMatrix adjacency;
    std::vector<double> o2o_scores;
};

HeadOutput head_forward(const HeadInput& input, const SuppressionThresholds& th, const HeadWeights& weights);

double sigmoid(double x);

}  // namespace polarkit
