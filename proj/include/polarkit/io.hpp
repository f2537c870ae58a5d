#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarkit/eval.hpp"
#include "polarkit/geometry.hpp"
#include "polarkit/harness.hpp"
#include "polarkit/numfmt.hpp"
#include "polarkit/o2o_head.hpp"
#include "polarkit/suppression.hpp"

namespace polarkit {

inline constexpr int kFormatVersion = 1;

struct Scene {
    ImageFrame frame;
    std::vector<LaneGrid> lanes;
    std::string meta;  // compact JSON object text, "{}" when absent
};

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

std::string candidates_to_json(const ImageFrame& frame, const Pole& global_pole, const CandidateSet& candidates);
CandidateSet candidates_from_json(const std::string& text, ImageFrame* frame = nullptr, Pole* pole = nullptr);

struct SelectionFile {
    std::string mode;
    std::vector<std::vector<std::size_t>> scenes;
};

std::string selections_to_json(const SelectionFile& sel);
SelectionFile selections_from_json(const std::string& text);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);

/// Columns: threshold,tp,fp,fn,precision,recall,f1; a trailing "mf1" row carries the mean.
std::string metrics_to_csv(const MetricsReport& report);
MetricsReport metrics_from_csv(const std::string& text);

std::string labels_to_json(const PoleGridLabels& labels, const std::vector<Pole>& poles);

std::string head_weights_to_json(const HeadWeights& w);
HeadWeights head_weights_from_json(const std::string& text);

/// Strict config parser for the pipeline; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

std::string bench_to_csv(const std::vector<BenchRow>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace polarkit
