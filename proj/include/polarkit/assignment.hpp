#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "polarkit/matrix.hpp"

namespace polarkit {

enum class CostMode { o2o, o2m };

struct CostConfig {
    double beta = 6.0;
    std::size_t k_dynamic = 4;
    std::size_t topk_for_dynamic = 10;
};

/// Affinity score_p * iou(q, p)^beta, shape G x K. `scores` is the one-to-one score
/// vector for CostMode::o2o and the one-to-many one for CostMode::o2m; the mode only
/// labels which one the caller passed.
MatrixD cost_matrix(std::span<const double> scores, const MatrixD& ious, double beta, CostMode mode = CostMode::o2m);

/// Rectangular assignment (rows <= cols) maximising the summed affinity.
/// Returns the column assigned to every row.
std::vector<std::size_t> hungarian_assign(const MatrixD& affinity);

/// Positive (prediction, gt) pairs, sorted by prediction then gt.
using PositivePairs = std::vector<std::pair<std::size_t, std::size_t>>;

PositivePairs simota_assign(const MatrixD& affinity, const MatrixD& ious, const CostConfig& cfg);

struct AssignmentResult {
    std::vector<std::size_t> o2o_map;  // per gt q, the prediction index
    PositivePairs o2m_pos;
    std::vector<std::size_t> o2o_negatives;
    std::vector<std::size_t> o2m_negatives;
};

/// Both branches over one candidate set: Hungarian on the o2o affinity, SimOTA on the o2m one.
AssignmentResult assign_labels(std::span<const double> o2o_scores, std::span<const double> o2m_scores,
                               const MatrixD& ious, const CostConfig& cfg);

}  // namespace polarkit
