#include "polarkit/eval.hpp"

#include <algorithm>
#include <cmath>

#include "polarkit/assignment.hpp"
#include "polarkit/laneiou.hpp"

namespace polarkit {

namespace {

// Max-weight injective matching where `weight(p, g) <= 0` means the pair is not allowed.
// Weights are shifted by a constant larger than any achievable total so that the
// number of matched pairs dominates.
template <typename Eligible, typename Value>
std::vector<std::pair<std::size_t, std::size_t>> lexicographic_match(std::size_t n_pred, std::size_t n_gt,
                                                                     Eligible eligible, Value value) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (n_pred == 0 || n_gt == 0) return pairs;
    const bool pred_rows = n_pred <= n_gt;
    const std::size_t rows = pred_rows ? n_pred : n_gt;
    const std::size_t cols = pred_rows ? n_gt : n_pred;
    const double bonus = static_cast<double>(rows) + 1.0;
    MatrixD w(rows, cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t p = pred_rows ? r : c;
            const std::size_t g = pred_rows ? c : r;
            if (eligible(p, g)) w(r, c) = bonus + value(p, g);
        }
    const auto assignment = hungarian_assign(w);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t c = assignment[r];
        if (!(w(r, c) > 0.0)) continue;
        pairs.emplace_back(pred_rows ? r : c, pred_rows ? c : r);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

MatchResult finish(std::vector<std::pair<std::size_t, std::size_t>> tp, std::size_t n_pred, std::size_t n_gt) {
    MatchResult m;
    std::vector<unsigned char> pm(n_pred, 0), gm(n_gt, 0);
    for (const auto& [p, g] : tp) {
        pm[p] = 1;
        gm[g] = 1;
    }
    for (std::size_t p = 0; p < n_pred; ++p)
        if (!pm[p]) m.fp.push_back(p);
    for (std::size_t g = 0; g < n_gt; ++g)
        if (!gm[g]) m.fn.push_back(g);
    m.tp = std::move(tp);
    return m;
}

MatchResult match_with_ious(const MatrixD& ious, std::size_t n_pred, std::size_t n_gt, double threshold) {
    // ious is |gts| x |preds|.
    auto tp = lexicographic_match(
        n_pred, n_gt, [&](std::size_t p, std::size_t g) { return ious(g, p) >= threshold; },
        [&](std::size_t p, std::size_t g) { return ious(g, p); });
    return finish(std::move(tp), n_pred, n_gt);
}

}  // namespace

MatchResult match_lanes(std::span<const LaneGrid> preds, std::span<const LaneGrid> gts, double iou_threshold,
                        double w_base) {
    const MatrixD ious = iou_matrix(preds, gts, GIoUParams{0.0, w_base});
    return match_with_ious(ious, preds.size(), gts.size(), iou_threshold);
}

ThresholdMetrics metrics_from_counts(double threshold, std::size_t tp, std::size_t fp, std::size_t fn) {
    ThresholdMetrics m{threshold, tp, fp, fn, 0.0, 0.0, 0.0};
    const double t = static_cast<double>(tp);
    if (tp + fp > 0) m.precision = t / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = t / static_cast<double>(tp + fn);
    // 2PR/(P+R) written over the counts: one rounding instead of four.
    if (tp > 0) m.f1 = 2.0 * t / static_cast<double>(2 * tp + fp + fn);
    return m;
}

const ThresholdMetrics* MetricsReport::at(double threshold) const {
    for (const auto& m : per_threshold)
        if (m.threshold == threshold) return &m;
    return nullptr;
}

std::vector<double> standard_iou_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
    return t;
}

double mean_f1(std::span<const ThresholdMetrics> per_threshold) {
    double sum = 0.0;
    for (double t : standard_iou_thresholds()) {
        for (const auto& m : per_threshold)
            if (m.threshold == t) {
                sum += m.f1;
                break;
            }
    }
    return sum / 10.0;
}

MetricsReport f1_suite(std::span<const ScenePair> scenes, std::span<const double> thresholds, double w_base) {
    std::vector<double> all(thresholds.begin(), thresholds.end());
    for (double t : standard_iou_thresholds())
        if (std::find(all.begin(), all.end(), t) == all.end()) all.push_back(t);

    std::vector<MatrixD> ious;
    ious.reserve(scenes.size());
    for (const auto& s : scenes) ious.push_back(iou_matrix(s.preds, s.gts, GIoUParams{0.0, w_base}));

    std::vector<ThresholdMetrics> computed;
    for (double t : all) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            const auto m = match_with_ious(ious[i], scenes[i].preds.size(), scenes[i].gts.size(), t);
            tp += m.tp.size();
            fp += m.fp.size();
            fn += m.fn.size();
        }
        computed.push_back(metrics_from_counts(t, tp, fp, fn));
    }

    MetricsReport report;
    report.per_threshold.assign(computed.begin(), computed.begin() + static_cast<std::ptrdiff_t>(thresholds.size()));
    report.mf1 = mean_f1(computed);
    return report;
}

TuSimpleReport tusimple_metrics(std::span<const ScenePair> scenes) {
    std::size_t correct_points = 0, total_points = 0;
    std::size_t n_pred = 0, n_gt = 0, matched = 0;
    for (const auto& scene : scenes) {
        n_pred += scene.preds.size();
        n_gt += scene.gts.size();
        const auto hits = [&](std::size_t p, std::size_t g) {
            const LaneGrid& gt = scene.gts[g];
            const LaneGrid& pr = scene.preds[p];
            std::size_t c = 0;
            for (std::size_t i = gt.first; i <= gt.last; ++i)
                if (pr.is_valid(i) && std::abs(pr.xs[i] - gt.xs[i]) <= kTuSimplePixelTolerance) ++c;
            return c;
        };
        for (const auto& gt : scene.gts) total_points += gt.valid_rows();
        // Pair lanes to maximise correct points, then apply the per-lane 85% rule.
        const auto pairs = lexicographic_match(
            scene.preds.size(), scene.gts.size(), [&](std::size_t p, std::size_t g) { return hits(p, g) > 0; },
            [&](std::size_t p, std::size_t g) {
                return static_cast<double>(hits(p, g)) / static_cast<double>(scene.gts[g].valid_rows());
            });
        for (const auto& [p, g] : pairs) {
            const std::size_t c = hits(p, g);
            correct_points += c;
            if (static_cast<double>(c) / static_cast<double>(scene.gts[g].valid_rows()) > kTuSimpleLaneAccuracy)
                ++matched;
        }
    }
    TuSimpleReport r;
    if (total_points > 0) r.accuracy = static_cast<double>(correct_points) / static_cast<double>(total_points);
    if (n_pred > 0) r.fpr = static_cast<double>(n_pred - matched) / static_cast<double>(n_pred);
    if (n_gt > 0) r.fnr = static_cast<double>(n_gt - matched) / static_cast<double>(n_gt);
    return r;
}

}  // namespace polarkit
