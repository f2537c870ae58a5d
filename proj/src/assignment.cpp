#include "polarkit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "polarkit/errors.hpp"

namespace polarkit {

MatrixD cost_matrix(std::span<const double> scores, const MatrixD& ious, double beta, CostMode /*mode*/) {
    if (ious.cols() != scores.size()) throw ShapeError("IoU matrix must be G x K with K = number of scores");
    if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
    MatrixD c(ious.rows(), ious.cols());
    for (std::size_t q = 0; q < ious.rows(); ++q)
        for (std::size_t p = 0; p < ious.cols(); ++p) {
            const double s = scores[p];
            const double iou = ious(q, p);
            if (s < 0.0 || iou < 0.0 || s > 1.0 || iou > 1.0)
                throw InvalidInput("scores and IoUs must lie in [0, 1]");
            c(q, p) = s * std::pow(iou, beta);
        }
    return c;
}

std::vector<std::size_t> hungarian_assign(const MatrixD& affinity) {
    const std::size_t n = affinity.rows();
    const std::size_t m = affinity.cols();
    if (n > m) throw InfeasibleAssignment("need K >= G (got G=" + std::to_string(n) + ", K=" + std::to_string(m) + ")");
    if (n == 0) return {};

    // Shortest augmenting path with potentials, 1-based with a virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<unsigned char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = -affinity(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

PositivePairs simota_assign(const MatrixD& affinity, const MatrixD& ious, const CostConfig& cfg) {
    if (affinity.rows() != ious.rows() || affinity.cols() != ious.cols())
        throw ShapeError("affinity and IoU matrices must share a shape");
    if (cfg.k_dynamic < 1) throw InvalidInput("k_dynamic must be at least 1");
    const std::size_t g = affinity.rows();
    const std::size_t k = affinity.cols();
    if (g == 0 || k == 0) return {};

    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> owner(k, kNone);
    std::vector<std::vector<std::size_t>> picks(g);

    for (std::size_t q = 0; q < g; ++q) {
        std::vector<double> row(ious.row(q).begin(), ious.row(q).end());
        const std::size_t top = std::min(cfg.topk_for_dynamic, k);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(top), row.end(), std::greater<>());
        double iou_sum = 0.0;
        for (std::size_t t = 0; t < top; ++t) iou_sum += row[t];
        const auto rounded = static_cast<long long>(std::llround(iou_sum));
        const std::size_t dyn = std::min<std::size_t>(
            std::clamp<long long>(rounded, 1, static_cast<long long>(cfg.k_dynamic)), k);

        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return affinity(q, a) > affinity(q, b); });
        picks[q].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dyn));
    }

    // Contested predictions go to the gt with the highest affinity (lower gt index on ties).
    for (std::size_t q = 0; q < g; ++q)
        for (std::size_t p : picks[q])
            if (owner[p] == kNone || affinity(q, p) > affinity(owner[p], p)) owner[p] = q;

    // A gt that lost every pick takes back one prediction so each gt keeps a positive
    // whenever K >= G: its best free prediction, else its best one held by a gt with spares.
    std::vector<std::size_t> count(g, 0);
    for (std::size_t p = 0; p < k; ++p)
        if (owner[p] != kNone) ++count[owner[p]];
    for (std::size_t q = 0; q < g; ++q) {
        if (count[q] > 0) continue;
        std::size_t best = kNone;
        for (int pass = 0; pass < 2 && best == kNone; ++pass) {
            for (std::size_t p = 0; p < k; ++p) {
                const bool eligible = pass == 0 ? owner[p] == kNone : (owner[p] != kNone && count[owner[p]] > 1);
                if (eligible && (best == kNone || affinity(q, p) > affinity(q, best))) best = p;
            }
        }
        if (best == kNone) continue;
        if (owner[best] != kNone) --count[owner[best]];
        owner[best] = q;
        ++count[q];
    }

    PositivePairs pairs;
    for (std::size_t p = 0; p < k; ++p)
        if (owner[p] != kNone) pairs.emplace_back(p, owner[p]);
    return pairs;
}

AssignmentResult assign_labels(std::span<const double> o2o_scores, std::span<const double> o2m_scores,
                               const MatrixD& ious, const CostConfig& cfg) {
    AssignmentResult r;
    const MatrixD o2o_cost = cost_matrix(o2o_scores, ious, cfg.beta, CostMode::o2o);
    const MatrixD o2m_cost = cost_matrix(o2m_scores, ious, cfg.beta, CostMode::o2m);
    r.o2o_map = hungarian_assign(o2o_cost);
    r.o2m_pos = simota_assign(o2m_cost, ious, cfg);

    const std::size_t k = ious.cols();
    std::vector<unsigned char> pos(k, 0);
    for (std::size_t p : r.o2o_map) pos[p] = 1;
    for (std::size_t p = 0; p < k; ++p)
        if (!pos[p]) r.o2o_negatives.push_back(p);
    std::fill(pos.begin(), pos.end(), 0);
    for (const auto& [p, q] : r.o2m_pos) pos[p] = 1;
    for (std::size_t p = 0; p < k; ++p)
        if (!pos[p]) r.o2m_negatives.push_back(p);
    return r;
}

}  // namespace polarkit
