#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polarkit/errors.hpp"
#include "polarkit/eval.hpp"
#include "polarkit/geometry.hpp"
#include "polarkit/harness.hpp"
#include "polarkit/io.hpp"

namespace fs = std::filesystem;
using namespace polarkit;

namespace {

std::string numbered(const char* stem, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.json", stem, i);
    return buf;
}

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    PipelineConfig cfg = pipeline_config_from_json(path.empty() ? "{}" : read_file(path));
    if (seed) cfg.seed = *seed;
    return cfg;
}

std::string scene_meta(std::size_t index, const SceneSpec& spec) {
    nlohmann::ordered_json m{{"index", index},
                             {"kind", spec.kind == SceneKind::dense ? "dense" : "sparse"},
                             {"seed", spec.seed}};
    return m.dump();
}

void cmd_gen_scenes(const std::string& config, std::optional<std::uint64_t> seed, const std::string& kind,
                    std::optional<std::size_t> count, const fs::path& out) {
    PipelineConfig cfg = load_config(config, seed);
    if (kind == "dense")
        cfg.scene.kind = SceneKind::dense;
    else if (kind == "sparse")
        cfg.scene.kind = SceneKind::sparse;
    if (count) cfg.scene_count = *count;
    const Pole pole = default_global_pole(cfg.scene.frame);
    for (std::size_t i = 0; i < cfg.scene_count; ++i) {
        const SceneSpec spec = scene_spec_for(cfg, i);
        const auto lanes = gen_scene(spec);
        write_file(out / numbered("scene", i), scene_to_json({spec.frame, lanes, scene_meta(i, spec)}));
        const auto cands = gen_candidates(lanes, candidate_spec_for(cfg, i), pole);
        write_file(out / numbered("candidates", i), candidates_to_json(spec.frame, pole, cands));
    }
}

void cmd_labels(const std::string& scene_path, double lambda, std::size_t rows, std::size_t cols, const fs::path& out) {
    const Scene scene = scene_from_json(read_file(scene_path));
    LpmConfig cfg;
    cfg.grid_rows = rows;
    cfg.grid_cols = cols;
    cfg.lambda_l = lambda;
    cfg.top_k = std::min(cfg.top_k, rows * cols);
    const auto poles = local_pole_lattice(scene.frame, rows, cols);
    const auto labels = lpm_labels(scene.lanes, poles, cfg);
    write_file(out / "labels.json", labels_to_json(labels, poles));
}

void cmd_run_pipeline(const std::string& config, std::optional<std::uint64_t> seed, bool dump_scenes,
                      const fs::path& out) {
    const PipelineConfig cfg = load_config(config, seed);
    const PipelineResult res = run_pipeline(cfg);
    write_file(out / "config.json", pipeline_config_to_json(cfg));
    for (const auto& mr : res.modes) {
        write_file(out / ("metrics_" + mr.mode.label + ".csv"), metrics_to_csv(mr.metrics));
        write_file(out / ("metrics_" + mr.mode.label + ".json"), metrics_to_json(mr.metrics));
        write_file(out / ("selections_" + mr.mode.label + ".json"), selections_to_json({mr.mode.label, mr.selections}));
    }
    if (dump_scenes) {
        const Pole pole = default_global_pole(cfg.scene.frame);
        for (std::size_t i = 0; i < res.scenes.size(); ++i) {
            const SceneSpec spec = scene_spec_for(cfg, i);
            write_file(out / "scenes" / numbered("scene", i),
                       scene_to_json({spec.frame, res.scenes[i].gts, scene_meta(i, spec)}));
            write_file(out / "scenes" / numbered("candidates", i),
                       candidates_to_json(spec.frame, pole, res.scenes[i].candidates));
        }
    }
    // Timing lives in its own file so every other output is reproducible byte for byte.
    nlohmann::ordered_json timing{{"wall_seconds", round_sig9(res.wall_seconds)}, {"scenes", res.scenes.size()}};
    write_file(out / "timing.json", timing.dump(2) + "\n");

    for (const auto& mr : res.modes) {
        const ThresholdMetrics* m50 = mr.metrics.at(0.5);
        std::cout << mr.mode.label << ": F1@50=" << format_sig9(m50 ? m50->f1 : 0.0)
                  << " mF1=" << format_sig9(mr.metrics.mf1) << "\n";
    }
}

std::vector<LaneGrid> lanes_from_any(const std::string& text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_object() && j.contains("candidates")) return lanes_of(candidates_from_json(text));
    return scene_from_json(text).lanes;
}

void cmd_eval(const std::vector<std::string>& gts, const std::vector<std::string>& preds,
              const std::string& selections, double w_base, const fs::path& out) {
    if (gts.size() != preds.size()) throw InvalidInput("--gt and --pred must be given the same number of times");
    std::optional<SelectionFile> sel;
    if (!selections.empty()) {
        sel = selections_from_json(read_file(selections));
        if (sel->scenes.size() != preds.size()) throw InvalidInput("selection file scene count differs from --pred");
    }
    std::vector<ScenePair> scenes;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        ScenePair sp;
        sp.gts = scene_from_json(read_file(gts[i])).lanes;
        auto lanes = lanes_from_any(read_file(preds[i]));
        if (sel) {
            for (std::size_t idx : sel->scenes[i]) {
                if (idx >= lanes.size()) throw InvalidInput("selection index out of range in scene " + std::to_string(i));
                sp.preds.push_back(lanes[idx]);
            }
        } else {
            sp.preds = std::move(lanes);
        }
        scenes.push_back(std::move(sp));
    }
    const auto thresholds = standard_iou_thresholds();
    const MetricsReport report = f1_suite(scenes, thresholds, w_base);
    const TuSimpleReport tus = tusimple_metrics(scenes);
    write_file(out / "metrics.csv", metrics_to_csv(report));
    write_file(out / "metrics.json", metrics_to_json(report));
    nlohmann::ordered_json tj{{"version", kFormatVersion},
                              {"accuracy", round_sig9(tus.accuracy)},
                              {"fpr", round_sig9(tus.fpr)},
                              {"fnr", round_sig9(tus.fnr)}};
    write_file(out / "tusimple.json", tj.dump(2) + "\n");
    std::cout << "F1@50=" << format_sig9(report.at(0.5)->f1) << " mF1=" << format_sig9(report.mf1) << "\n";
}

void cmd_bench(const std::vector<std::size_t>& ks, std::size_t reps, std::uint64_t seed, const fs::path& out) {
    for (std::size_t k : ks)
        if (k == 0) throw InvalidInput("K values must be >= 1");
    if (reps == 0) throw InvalidInput("--reps must be >= 1");
    const auto rows = bench_suppression(ks, reps, seed);
    write_file(out / "bench.csv", bench_to_csv(rows));
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.mode == "fast_geometric") {
            x.push_back(static_cast<double>(r.k));
            y.push_back(r.median_seconds);
        }
    if (x.size() >= 3) std::cout << "fast_geometric quadratic fit R^2=" << format_sig9(quadratic_fit_r2(x, y)) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polar lane-detection post-processing toolkit"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out = ".";

    auto* gen = app.add_subcommand("gen-scenes", "Generate synthetic scenes and candidate sets");
    std::string kind;
    std::optional<std::size_t> count;
    gen->add_option("--config", config, "Pipeline config JSON");
    gen->add_option("--seed", seed, "Base seed");
    gen->add_option("--kind", kind, "sparse or dense")->check(CLI::IsMember({"sparse", "dense"}));
    gen->add_option("--count", count, "Number of scenes");
    gen->add_option("--out", out, "Output directory");

    auto* lab = app.add_subcommand("labels", "Dump local-pole labels for a scene");
    std::string scene_path;
    double lambda = 0.0;
    std::size_t grid_rows = 4, grid_cols = 10;
    lab->add_option("--scene", scene_path, "Scene JSON")->required();
    lab->add_option("--lambda", lambda, "Positive-pole radius lambda_l (px)")->required();
    lab->add_option("--grid-rows", grid_rows, "Pole lattice rows");
    lab->add_option("--grid-cols", grid_cols, "Pole lattice columns");
    lab->add_option("--out", out, "Output directory");

    auto* run = app.add_subcommand("run-pipeline", "Compare suppression modes on seeded scenes");
    bool dump_scenes = false;
    run->add_option("--config", config, "Pipeline config JSON");
    run->add_option("--seed", seed, "Base seed (overrides the config)");
    run->add_flag("--dump-scenes", dump_scenes, "Also write the scenes and candidate sets");
    run->add_option("--out", out, "Output directory");

    auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
    std::vector<std::string> gt_files, pred_files;
    std::string selections;
    double eval_w_base = 15.0;
    ev->add_option("--gt", gt_files, "Ground-truth scene JSON (repeatable)")->required();
    ev->add_option("--pred", pred_files, "Prediction scene or candidates JSON (repeatable)")->required();
    ev->add_option("--selections", selections, "Selection file picking candidates per scene");
    ev->add_option("--w-base", eval_w_base, "Lane semi-width for the matching IoU (px)");
    ev->add_option("--out", out, "Output directory");

    auto* bench = app.add_subcommand("bench", "Time the suppression paths over K");
    std::vector<std::size_t> ks{32, 64, 128, 256, 512, 1024};
    std::size_t reps = 5;
    std::uint64_t bench_seed = 0;
    bench->add_option("--k", ks, "Candidate counts");
    bench->add_option("--reps", reps, "Repetitions per K");
    bench->add_option("--seed", bench_seed, "Seed");
    bench->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen)
            cmd_gen_scenes(config, seed, kind, count, out);
        else if (*lab)
            cmd_labels(scene_path, lambda, grid_rows, grid_cols, out);
        else if (*run)
            cmd_run_pipeline(config, seed, dump_scenes, out);
        else if (*ev)
            cmd_eval(gt_files, pred_files, selections, eval_w_base, out);
        else if (*bench)
            cmd_bench(ks, reps, bench_seed, out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
