#include "polarkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "polarkit/errors.hpp"
#include "polarkit/numfmt.hpp"
#include "polarkit/laneiou.hpp"
#include "polarkit/parallel.hpp"
#include "polarkit/rng.hpp"

namespace polarkit {

namespace {

constexpr std::size_t kPolylineSamples = 64;
constexpr int kSceneAttempts = 200;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finaliser
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// x(v) = bottom + (top - bottom) v + bow v (1 - v), with v = 0 at the bottom edge and
// v = 1 at the lane's top row. Quadratic in y.
struct QuadLane {
    double bottom = 0.0;
    double top = 0.0;
    double bow = 0.0;

    double at(double v) const { return bottom + (top - bottom) * v + bow * v * (1.0 - v); }
};

LaneGrid sample_lane(const ImageFrame& frame, double y_top, auto&& x_of_v) {
    std::vector<Point> pts;
    pts.reserve(kPolylineSamples);
    for (std::size_t s = 0; s < kPolylineSamples; ++s) {
        const double v = static_cast<double>(s) / static_cast<double>(kPolylineSamples - 1);
        const double y = frame.height - v * (frame.height - y_top);
        pts.push_back({x_of_v(v), y});
    }
    LaneGrid lane = polyline_to_grid(pts, frame);
    for (std::size_t i = lane.first; i <= lane.last; ++i) lane.xs[i] = round_sig9(lane.xs[i]);
    return lane;
}

double v_of_row(const ImageFrame& frame, double y_top, std::size_t row) {
    return (frame.height - frame.row_y(row)) / (frame.height - y_top);
}

std::vector<QuadLane> spread_roots(const SceneSpec& spec, std::size_t roots, Rng& rng) {
    const double w = spec.frame.width;
    std::vector<QuadLane> lanes;
    for (std::size_t k = 0; k < roots; ++k) {
        const double slot = (static_cast<double>(k) + 0.5) / static_cast<double>(roots);
        const double bottom = w * (0.05 + 0.9 * slot) + rng.uniform(-0.04, 0.04) * w / static_cast<double>(roots);
        const double top = w / 2.0 + (bottom - w / 2.0) * 0.5 + rng.uniform(-8.0, 8.0);
        const double bow = rng.uniform(spec.curvature_min, spec.curvature_max) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        lanes.push_back({bottom, top, bow});
    }
    return lanes;
}

bool sparse_ok(const std::vector<LaneGrid>& lanes, double w_base) {
    const GIoUParams params{0.0, w_base};
    for (std::size_t a = 0; a < lanes.size(); ++a)
        for (std::size_t b = a + 1; b < lanes.size(); ++b)
            if (glane_iou(lanes[a], lanes[b], params) >= 0.1) return false;
    return true;
}

std::vector<LaneGrid> try_scene(const SceneSpec& spec, Rng& rng) {
    const double y_top = spec.top_fraction * spec.frame.height;
    std::vector<LaneGrid> lanes;
    if (spec.kind == SceneKind::sparse) {
        for (const auto& q : spread_roots(spec, spec.lane_count, rng))
            lanes.push_back(sample_lane(spec.frame, y_top, [&](double v) { return q.at(v); }));
        return lanes;
    }

    const std::size_t roots = spec.lane_count - 2;
    const auto quads = spread_roots(spec, roots, rng);
    const std::size_t fork_root = rng.below(roots);
    std::size_t double_root = rng.below(roots - 1);
    if (double_root >= fork_root) ++double_root;

    for (std::size_t k = 0; k < roots; ++k)
        lanes.push_back(sample_lane(spec.frame, y_top, [&](double v) { return quads[k].at(v); }));

    // Fork: branch away from the image centre so it does not run into the neighbour.
    const QuadLane& base = quads[fork_root];
    const double dir = base.top >= spec.frame.width / 2.0 ? 1.0 : -1.0;
    const LaneGrid& trunk = lanes[fork_root];
    LaneGrid branch = trunk;
    for (std::size_t i = trunk.first; i <= trunk.last; ++i) {
        const double v = v_of_row(spec.frame, y_top, i);
        if (v > spec.branch_fraction) {
            const double t = (v - spec.branch_fraction) / (1.0 - spec.branch_fraction);
            branch.xs[i] = round_sig9(trunk.xs[i] + dir * spec.fork_separation * t);
        }
    }

    const QuadLane& twin_base = quads[double_root];
    const double twin_dir = twin_base.top >= spec.frame.width / 2.0 ? 1.0 : -1.0;
    LaneGrid twin = lanes[double_root];
    for (std::size_t i = twin.first; i <= twin.last; ++i)
        twin.xs[i] = round_sig9(twin.xs[i] + twin_dir * spec.double_lane_separation);

    lanes.push_back(std::move(branch));
    lanes.push_back(std::move(twin));
    return lanes;
}

double mean_abs_offset(const LaneGrid& a, const LaneGrid& b) {
    double s = 0.0;
    for (std::size_t i = a.first; i <= a.last; ++i) s += std::abs(a.xs[i] - b.xs[i]);
    return s / static_cast<double>(a.valid_rows());
}

}  // namespace

void SceneSpec::validate() const {
    frame.validate();
    if (!(w_base > 0.0)) throw InvalidSpec("w_base must be positive");
    if (!(top_fraction >= 0.0 && top_fraction < 0.9)) throw InvalidSpec("top_fraction must lie in [0, 0.9)");
    if (curvature_min > curvature_max) throw InvalidSpec("curvature range is inverted");
    if (kind == SceneKind::sparse) {
        if (lane_count < 1) throw InvalidSpec("sparse scenes need at least one lane");
        return;
    }
    if (lane_count < 4) throw InvalidSpec("dense scenes need at least 4 lanes (a fork pair and a double lane)");
    if (!(double_lane_separation > 0.0) || double_lane_separation >= 2.0 * w_base)
        throw InvalidSpec("double-lane separation must lie in (0, 2 * w_base) for a dense scene");
    if (!(fork_separation > 0.0)) throw InvalidSpec("fork separation must be positive");
    if (!(branch_fraction > 0.0 && branch_fraction < 1.0)) throw InvalidSpec("branch_fraction must lie in (0, 1)");
}

std::vector<LaneGrid> gen_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    if (spec.kind == SceneKind::dense) return try_scene(spec, rng);
    for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
        auto lanes = try_scene(spec, rng);
        if (sparse_ok(lanes, spec.w_base)) return lanes;
    }
    throw InvalidSpec("could not place " + std::to_string(spec.lane_count) + " lanes with pairwise IoU < 0.1");
}

void CandidateGenSpec::validate() const {
    if (!(sigma_theta > 0.0 && sigma_r > 0.0 && sigma_x > 0.0 && sigma_s > 0.0))
        throw InvalidSpec("candidate noise scales must be positive");
    if (score_noise < 0.0 || !(background_cap >= 0.0 && background_cap <= 1.0))
        throw InvalidSpec("score noise must be >= 0 and the background cap in [0, 1]");
}

CandidateSet gen_candidates(const std::vector<LaneGrid>& gts, const CandidateGenSpec& spec, const Pole& global_pole) {
    spec.validate();
    Rng rng(spec.seed);
    CandidateSet out;
    for (const auto& gt : gts) {
        const PolarAnchor chord = lane_chord_anchor(gt, global_pole);
        for (std::size_t m = 0; m < spec.per_gt; ++m) {
            PolarAnchor anchor = chord;
            anchor.theta = round_sig9(chord.theta + rng.normal(0.0, spec.sigma_theta));
            anchor.radius = round_sig9(chord.radius + rng.normal(0.0, spec.sigma_r));
            const auto anchor_xs = sample_anchor_xs(anchor, gt.frame);
            // Regression = offsets that land on the gt, plus a smooth lateral error.
            const double bias = rng.normal(0.0, spec.sigma_x);
            const double tilt = rng.normal(0.0, spec.sigma_x / 2.0);
            std::vector<double> xs(gt.xs.size(), 0.0);
            for (std::size_t i = gt.first; i <= gt.last; ++i) {
                const double v = static_cast<double>(i - gt.first) / static_cast<double>(gt.valid_rows() - 1);
                const double offset = (gt.xs[i] - anchor_xs[i]) + bias + tilt * (v - 0.5);
                xs[i] = round_sig9(anchor_xs[i] + offset);
            }
            Candidate c{anchor, make_lane(std::move(xs), gt.first, gt.last, gt.frame), 0.0, std::nullopt};
            const double pert = mean_abs_offset(c.lane, gt);
            const double s = std::exp(-(pert * pert) / (spec.sigma_s * spec.sigma_s)) +
                             rng.uniform(-spec.score_noise, spec.score_noise);
            c.score_o2m = round_sig9(std::clamp(s, 0.0, 1.0));
            out.push_back(std::move(c));
        }
    }

    if (spec.background > 0 && !gts.empty()) {
        const ImageFrame frame = gts.front().frame;
        for (std::size_t b = 0; b < spec.background; ++b) {
            const double bottom = rng.uniform(0.0, frame.width);
            const double top = rng.uniform(0.3 * frame.width, 0.7 * frame.width);
            const double y_top = rng.uniform(0.45, 0.7) * frame.height;
            std::vector<double> xs(frame.n_rows, 0.0);
            std::size_t first = frame.n_rows;
            for (std::size_t i = 0; i < frame.n_rows; ++i) {
                if (frame.row_y(i) < y_top) continue;
                first = std::min(first, i);
                const double v = (frame.height - frame.row_y(i)) / (frame.height - y_top);
                xs[i] = round_sig9(bottom + (top - bottom) * v);
            }
            if (first + 1 >= frame.n_rows) first = frame.n_rows - 2;
            LaneGrid lane = make_lane(std::move(xs), first, frame.n_rows - 1, frame);
            const PolarAnchor anchor = lane_chord_anchor(lane, global_pole);
            Candidate c{PolarAnchor{round_sig9(anchor.theta), round_sig9(anchor.radius), global_pole},
                        std::move(lane), round_sig9(rng.uniform(0.0, spec.background_cap)), std::nullopt};
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<double> oracle_o2o_scores(const CandidateSet& candidates, const std::vector<LaneGrid>& gts,
                                      double w_base) {
    std::vector<double> scores(candidates.size(), 0.0);
    if (candidates.empty()) return scores;
    const MatrixD ious = iou_matrix(lanes_of(candidates), gts, GIoUParams{0.0, w_base});
    for (std::size_t q = 0; q < gts.size(); ++q) {
        std::size_t best = 0;
        for (std::size_t p = 1; p < candidates.size(); ++p)
            if (ious(q, p) > ious(q, best)) best = p;
        scores[best] = 1.0;
    }
    return scores;
}

HeadInput synthetic_head_input(const CandidateSet& candidates, std::size_t channels, std::uint64_t seed) {
    HeadInput in;
    if (candidates.empty()) return in;
    const ImageFrame frame = candidates.front().lane.frame;
    const std::size_t n = frame.n_rows;
    Rng rng(seed);
    struct Wave {
        double fx, fy, phase;
    };
    std::array<std::vector<Wave>, 3> waves;
    for (auto& level : waves)
        for (std::size_t c = 0; c < channels; ++c)
            level.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), rng.uniform(0.0, 2.0 * std::numbers::pi)});

    in.anchor_xs = MatrixD(candidates.size(), n);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto xs = sample_anchor_xs(candidates[j].anchor, frame);
        std::copy(xs.begin(), xs.end(), in.anchor_xs.row(j).begin());
        LevelFeatures feats;
        for (std::size_t k = 0; k < 3; ++k) {
            feats[k] = MatrixD(n, channels);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < channels; ++c) {
                    const Wave& w = waves[k][c];
                    feats[k](i, c) = std::sin(2.0 * std::numbers::pi * (w.fx * xs[i] / frame.width +
                                                                         w.fy * frame.row_y(i) / frame.height) +
                                              w.phase);
                }
        }
        in.level_feats.push_back(std::move(feats));
        in.scores.push_back(candidates[j].score_o2m);
        in.anchors.push_back(candidates[j].anchor);
    }
    return in;
}

ModeSpec sequential_preset(double pixels) {
    return ModeSpec{"sequential@" + format_sig9(pixels), ModeKind::sequential, pixels};
}

SceneSpec scene_spec_for(const PipelineConfig& cfg, std::size_t scene_index) {
    SceneSpec s = cfg.scene;
    s.seed = mix_seed(cfg.seed, 2 * scene_index);
    return s;
}

CandidateGenSpec candidate_spec_for(const PipelineConfig& cfg, std::size_t scene_index) {
    CandidateGenSpec c = cfg.candidates;
    c.seed = mix_seed(cfg.seed, 2 * scene_index + 1);
    return c;
}

std::uint64_t hash_candidates(const CandidateSet& candidates) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto feed = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& c : candidates) {
        feed(c.anchor.theta);
        feed(c.anchor.radius);
        feed(c.score_o2m);
        feed(static_cast<double>(c.lane.first));
        feed(static_cast<double>(c.lane.last));
        for (std::size_t i = c.lane.first; i <= c.lane.last; ++i) feed(c.lane.xs[i]);
    }
    return h;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.scene.validate();
    cfg.candidates.validate();
    const Pole pole = default_global_pole(cfg.scene.frame);

    PipelineResult result;
    result.scenes.resize(cfg.scene_count);
    result.modes.resize(cfg.modes.size());
    for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
        result.modes[m].mode = cfg.modes[m];
        result.modes[m].selections.resize(cfg.scene_count);
    }

    const bool need_o2o = std::any_of(cfg.modes.begin(), cfg.modes.end(),
                                      [](const ModeSpec& m) { return m.kind == ModeKind::dual_confidence; });
    std::optional<HeadWeights> weights;
    if (need_o2o && cfg.regime == ScoreRegime::random_head) {
        HeadDims dims = cfg.head;
        dims.n_points = cfg.scene.frame.n_rows;
        weights = random_head_weights(dims, cfg.head_seed);
    }

    parallel_for(cfg.scene_count, [&](std::size_t s) {
        SceneData& scene = result.scenes[s];
        scene.gts = gen_scene(scene_spec_for(cfg, s));
        scene.candidates = gen_candidates(scene.gts, candidate_spec_for(cfg, s), pole);
        scene.candidate_hash = hash_candidates(scene.candidates);

        if (need_o2o && !scene.candidates.empty()) {
            std::vector<double> o2o;
            if (cfg.regime == ScoreRegime::oracle) {
                o2o = oracle_o2o_scores(scene.candidates, scene.gts, cfg.eval_w_base);
            } else {
                const HeadInput in = synthetic_head_input(scene.candidates, cfg.head.channels, cfg.head_seed);
                o2o = head_forward(in, cfg.thresholds, *weights).o2o_scores;
            }
            for (std::size_t i = 0; i < o2o.size(); ++i) scene.candidates[i].score_o2o = round_sig9(o2o[i]);
        }

        for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
            const ModeSpec& mode = cfg.modes[m];
            if (hash_candidates(scene.candidates) != scene.candidate_hash)
                throw std::logic_error("candidate set changed between modes");
            std::vector<std::size_t> sel;
            switch (mode.kind) {
                case ModeKind::sequential:
                    sel = sequential_nms(scene.candidates, iou_distance(mode.w_base), cfg.thresholds.tau_d,
                                         cfg.thresholds.tau_o2m);
                    break;
                case ModeKind::fast_geometric:
                    sel = fast_nms_geometric(scene.candidates, cfg.thresholds, iou_distance(mode.w_base));
                    break;
                case ModeKind::dual_confidence:
                    sel = dual_confidence_select(scene.candidates, cfg.thresholds.tau_o2o, cfg.thresholds.tau_o2m);
                    break;
            }
            result.modes[m].selections[s] = std::move(sel);
        }
    });

    for (auto& mr : result.modes) {
        std::vector<ScenePair> pairs(cfg.scene_count);
        for (std::size_t s = 0; s < cfg.scene_count; ++s) {
            pairs[s].gts = result.scenes[s].gts;
            for (std::size_t idx : mr.selections[s]) pairs[s].preds.push_back(result.scenes[s].candidates[idx].lane);
        }
        mr.metrics = f1_suite(pairs, cfg.eval_thresholds, cfg.eval_w_base);
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

CandidateSet random_candidates(std::size_t k, const ImageFrame& frame, std::uint64_t seed) {
    Rng rng(seed);
    const Pole pole = default_global_pole(frame);
    CandidateSet out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double bottom = rng.uniform(0.0, frame.width);
        const double top = rng.uniform(0.35 * frame.width, 0.65 * frame.width);
        const double bow = rng.uniform(-30.0, 30.0);
        const std::size_t first = static_cast<std::size_t>(rng.below(frame.n_rows / 2));
        std::vector<double> xs(frame.n_rows, 0.0);
        for (std::size_t r = first; r < frame.n_rows; ++r) {
            const double v = static_cast<double>(frame.n_rows - 1 - r) / static_cast<double>(frame.n_rows - 1);
            xs[r] = bottom + (top - bottom) * v + bow * v * (1.0 - v);
        }
        LaneGrid lane = make_lane(std::move(xs), first, frame.n_rows - 1, frame);
        const PolarAnchor anchor = lane_chord_anchor(lane, pole);
        out.push_back(Candidate{anchor, std::move(lane), rng.uniform(), std::nullopt});
    }
    return out;
}

std::vector<BenchRow> bench_suppression(const std::vector<std::size_t>& ks, std::size_t repetitions,
                                        std::uint64_t seed) {
    const ImageFrame frame;
    const SuppressionThresholds th;
    const LaneDistance distance = iou_distance(15.0);
    std::vector<BenchRow> rows;
    for (std::size_t k : ks) {
        if (k < 1) throw InvalidInput("benchmark K values must be >= 1");
        const CandidateSet cands = random_candidates(k, frame, mix_seed(seed, k));
        const auto time_mode = [&](const std::string& name, auto&& run) {
            std::vector<double> samples;
            std::size_t selected = 0;
            for (std::size_t r = 0; r < std::max<std::size_t>(repetitions, 1); ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                selected = run().size();
                samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
            std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2),
                             samples.end());
            rows.push_back({name, k, samples[samples.size() / 2], selected});
        };
        time_mode("fast_geometric", [&] { return fast_nms_geometric(cands, th, distance); });
        time_mode("sequential", [&] { return sequential_nms(cands, distance, th.tau_d, th.tau_o2m); });
    }
    return rows;
}

double quadratic_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw InvalidInput("quadratic fit needs >= 3 paired samples");
    // Normal equations on [1, x, x^2] after scaling x to [0, 1].
    const double scale = *std::max_element(x.begin(), x.end());
    double s[5] = {0, 0, 0, 0, 0};
    double t[3] = {0, 0, 0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = x[i] / scale;
        double p = 1.0;
        for (int e = 0; e < 5; ++e) {
            s[e] += p;
            if (e < 3) t[e] += p * y[i];
            p *= u;
        }
    }
    double a[3][4] = {{s[0], s[1], s[2], t[0]}, {s[1], s[2], s[3], t[1]}, {s[2], s[3], s[4], t[2]}};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
        }
    }
    const double c0 = a[0][3] / a[0][0], c1 = a[1][3] / a[1][1], c2 = a[2][3] / a[2][2];
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = x[i] / scale;
        const double f = c0 + c1 * u + c2 * u * u;
        ss_res += (y[i] - f) * (y[i] - f);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace polarkit
