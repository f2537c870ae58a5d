#include "polarkit/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "polarkit/errors.hpp"

namespace polarkit {

namespace {

using Json = nlohmann::ordered_json;

Json num(double v) { return Json(round_sig9(v)); }

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

void expect_object(const Json& j, const std::string& ctx) {
    if (!j.is_object()) throw ParseError("field '" + ctx + "': expected an object");
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
    expect_object(j, ctx);
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ParseError("unknown field '" + key + "' in " + ctx);
    }
}

std::string path(const std::string& ctx, const std::string& key) { return ctx.empty() ? key : ctx + "." + key; }

const Json& field(const Json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError("missing field '" + path(ctx, key) + "'");
    return *it;
}

double as_double(const Json& v, const std::string& what) {
    if (!v.is_number()) throw ParseError("field '" + what + "': expected a number");
    return v.get<double>();
}

std::size_t as_index(const Json& v, const std::string& what) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ParseError("field '" + what + "': expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string as_string(const Json& v, const std::string& what) {
    if (!v.is_string()) throw ParseError("field '" + what + "': expected a string");
    return v.get<std::string>();
}

const Json& as_array(const Json& v, const std::string& what) {
    if (!v.is_array()) throw ParseError("field '" + what + "': expected an array");
    return v;
}

double get_double(const Json& j, const char* key, const std::string& ctx) {
    return as_double(field(j, key, ctx), path(ctx, key));
}

std::size_t get_index(const Json& j, const char* key, const std::string& ctx) {
    return as_index(field(j, key, ctx), path(ctx, key));
}

template <typename T>
void maybe(const Json& j, const char* key, const std::string& ctx, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if constexpr (std::is_same_v<T, double>)
        out = as_double(*it, path(ctx, key));
    else if constexpr (std::is_same_v<T, std::string>)
        out = as_string(*it, path(ctx, key));
    else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ParseError("field '" + path(ctx, key) + "': expected a boolean");
        out = it->template get<bool>();
    } else
        out = static_cast<T>(as_index(*it, path(ctx, key)));
}

void check_version(const Json& j) {
    const auto& v = field(j, "version", "");
    if (!v.is_number_integer()) throw ParseError("field 'version': expected an integer");
    if (v.get<long long>() != kFormatVersion)
        throw VersionError("unsupported format version " + std::to_string(v.get<long long>()) + " (expected " +
                           std::to_string(kFormatVersion) + ")");
}

Json frame_json(const ImageFrame& f) { return Json{{"w", num(f.width)}, {"h", num(f.height)}, {"n_rows", f.n_rows}}; }

ImageFrame frame_from(const Json& j, const std::string& ctx) {
    check_keys(j, {"w", "h", "n_rows"}, ctx);
    ImageFrame f{get_double(j, "w", ctx), get_double(j, "h", ctx), get_index(j, "n_rows", ctx)};
    try {
        f.validate();
    } catch (const ValidationError& e) {
        throw ParseError("field '" + ctx + "': " + e.what());
    }
    return f;
}

Json lane_points_json(const LaneGrid& lane) {
    Json pts = Json::array();
    for (std::size_t i = lane.first; i <= lane.last; ++i)
        pts.push_back(Json::array({num(lane.xs[i]), num(lane.frame.row_y(i))}));
    return Json{{"points", pts}};
}

// Points that sit on consecutive grid rows are taken verbatim; anything else is
// resampled onto the grid.
LaneGrid lane_from_points(const Json& j, const ImageFrame& frame, const std::string& ctx) {
    check_keys(j, {"points"}, ctx);
    const Json& pts = as_array(field(j, "points", ctx), path(ctx, "points"));
    std::vector<Point> points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string pctx = path(ctx, "points") + "[" + std::to_string(i) + "]";
        if (!pts[i].is_array() || pts[i].size() != 2) throw ParseError("field '" + pctx + "': expected [x, y]");
        points.push_back({as_double(pts[i][0], pctx + "[0]"), as_double(pts[i][1], pctx + "[1]")});
    }
    if (points.size() < 2) throw ParseError("field '" + ctx + "': a lane needs at least 2 points");

    const double tol = 1e-6 * std::max(1.0, frame.height);
    std::vector<std::size_t> rows;
    for (const auto& p : points) {
        const double r = p.y / frame.row_step() - 1.0;
        const double rr = std::round(r);
        if (rr < 0.0 || rr >= static_cast<double>(frame.n_rows) ||
            std::abs(frame.row_y(static_cast<std::size_t>(rr)) - p.y) > tol)
            break;
        rows.push_back(static_cast<std::size_t>(rr));
    }
    bool aligned = rows.size() == points.size();
    for (std::size_t i = 1; aligned && i < rows.size(); ++i) aligned = rows[i] == rows[i - 1] + 1;
    try {
        if (aligned) {
            std::vector<double> xs(frame.n_rows, 0.0);
            for (std::size_t i = 0; i < rows.size(); ++i) xs[rows[i]] = points[i].x;
            return make_lane(std::move(xs), rows.front(), rows.back(), frame);
        }
        return polyline_to_grid(points, frame);
    } catch (const InvalidLane& e) {
        throw ParseError("field '" + ctx + "': " + e.what());
    }
}

Json matrix_json(const MatrixD& m) {
    Json data = Json::array();
    for (double v : m.data()) data.push_back(num(v));
    return Json{{"shape", Json::array({m.rows(), m.cols()})}, {"data", data}};
}

MatrixD matrix_from(const Json& j, const std::string& ctx) {
    check_keys(j, {"shape", "data"}, ctx);
    const Json& shape = as_array(field(j, "shape", ctx), path(ctx, "shape"));
    if (shape.size() != 2) throw ParseError("field '" + path(ctx, "shape") + "': expected [rows, cols]");
    const std::size_t r = as_index(shape[0], path(ctx, "shape[0]"));
    const std::size_t c = as_index(shape[1], path(ctx, "shape[1]"));
    const Json& data = as_array(field(j, "data", ctx), path(ctx, "data"));
    if (data.size() != r * c) throw ParseError("field '" + path(ctx, "data") + "': size does not match shape");
    MatrixD m(r, c);
    for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = as_double(data[i], path(ctx, "data"));
    return m;
}

Json vector_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> vector_from(const Json& j, const std::string& ctx) {
    std::vector<double> v;
    for (const auto& x : as_array(j, ctx)) v.push_back(as_double(x, ctx));
    return v;
}

Json dense_json(const Dense& d) { return Json{{"weight", matrix_json(d.weight)}, {"bias", vector_json(d.bias)}}; }

Dense dense_from(const Json& j, const std::string& ctx) {
    check_keys(j, {"weight", "bias"}, ctx);
    return Dense{matrix_from(field(j, "weight", ctx), path(ctx, "weight")),
                 vector_from(field(j, "bias", ctx), path(ctx, "bias"))};
}

Json mlp_json(const Mlp& m) {
    Json a = Json::array();
    for (const auto& l : m.layers) a.push_back(dense_json(l));
    return a;
}

Mlp mlp_from(const Json& j, const std::string& ctx) {
    Mlp m;
    const Json& a = as_array(j, ctx);
    for (std::size_t i = 0; i < a.size(); ++i) m.layers.push_back(dense_from(a[i], ctx + "[" + std::to_string(i) + "]"));
    return m;
}

Json threshold_json(const ThresholdMetrics& m) {
    return Json{{"threshold", num(m.threshold)}, {"tp", m.tp},           {"fp", m.fp},
                {"fn", m.fn},                    {"precision", num(m.precision)}, {"recall", num(m.recall)},
                {"f1", num(m.f1)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

const char* kind_name(ModeKind k) {
    switch (k) {
        case ModeKind::sequential: return "sequential";
        case ModeKind::fast_geometric: return "fast_geometric";
        case ModeKind::dual_confidence: return "dual_confidence";
    }
    return "sequential";
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
    Json lanes = Json::array();
    for (const auto& l : scene.lanes) lanes.push_back(lane_points_json(l));
    Json j{{"version", kFormatVersion}, {"frame", frame_json(scene.frame)}, {"lanes", lanes}};
    j["meta"] = scene.meta.empty() ? Json::object() : Json::parse(scene.meta);
    return dump(j);
}

Scene scene_from_json(const std::string& text) {
    const Json j = parse_json(text);
    check_keys(j, {"version", "frame", "lanes", "meta"}, "scene");
    check_version(j);
    Scene s;
    s.frame = frame_from(field(j, "frame", ""), "frame");
    const Json& lanes = as_array(field(j, "lanes", ""), "lanes");
    for (std::size_t i = 0; i < lanes.size(); ++i)
        s.lanes.push_back(lane_from_points(lanes[i], s.frame, "lanes[" + std::to_string(i) + "]"));
    auto meta = j.find("meta");
    if (meta != j.end()) {
        expect_object(*meta, "meta");
        s.meta = meta->dump();
    } else {
        s.meta = "{}";
    }
    return s;
}

std::string candidates_to_json(const ImageFrame& frame, const Pole& global_pole, const CandidateSet& candidates) {
    Json arr = Json::array();
    for (const auto& c : candidates) {
        Json xs = Json::array();
        for (std::size_t i = c.lane.first; i <= c.lane.last; ++i) xs.push_back(num(c.lane.xs[i]));
        arr.push_back(Json{{"theta", num(c.anchor.theta)},
                           {"radius", num(c.anchor.radius)},
                           {"score_o2m", num(c.score_o2m)},
                           {"score_o2o", c.score_o2o ? num(*c.score_o2o) : Json(nullptr)},
                           {"first", c.lane.first},
                           {"xs", xs}});
    }
    Json j{{"version", kFormatVersion},
           {"frame", frame_json(frame)},
           {"pole", Json::array({num(global_pole.position.x), num(global_pole.position.y)})},
           {"candidates", arr}};
    return dump(j);
}

CandidateSet candidates_from_json(const std::string& text, ImageFrame* frame_out, Pole* pole_out) {
    const Json j = parse_json(text);
    check_keys(j, {"version", "frame", "pole", "candidates"}, "candidates file");
    check_version(j);
    const ImageFrame frame = frame_from(field(j, "frame", ""), "frame");
    const Json& pj = as_array(field(j, "pole", ""), "pole");
    if (pj.size() != 2) throw ParseError("field 'pole': expected [x, y]");
    const Pole pole{{as_double(pj[0], "pole[0]"), as_double(pj[1], "pole[1]")}, PoleKind::global};

    CandidateSet out;
    const Json& arr = as_array(field(j, "candidates", ""), "candidates");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string ctx = "candidates[" + std::to_string(i) + "]";
        check_keys(arr[i], {"theta", "radius", "score_o2m", "score_o2o", "first", "xs"}, ctx);
        Candidate c;
        c.anchor = {get_double(arr[i], "theta", ctx), get_double(arr[i], "radius", ctx), pole};
        c.score_o2m = get_double(arr[i], "score_o2m", ctx);
        const Json& o2o = field(arr[i], "score_o2o", ctx);
        if (!o2o.is_null()) c.score_o2o = as_double(o2o, path(ctx, "score_o2o"));
        const std::size_t first = get_index(arr[i], "first", ctx);
        const auto valid = vector_from(field(arr[i], "xs", ctx), path(ctx, "xs"));
        if (valid.empty() || first + valid.size() > frame.n_rows)
            throw ParseError("field '" + path(ctx, "xs") + "': row range does not fit the frame");
        std::vector<double> xs(frame.n_rows, 0.0);
        std::copy(valid.begin(), valid.end(), xs.begin() + static_cast<std::ptrdiff_t>(first));
        try {
            c.lane = make_lane(std::move(xs), first, first + valid.size() - 1, frame);
        } catch (const InvalidLane& e) {
            throw ParseError("field '" + ctx + "': " + e.what());
        }
        out.push_back(std::move(c));
    }
    if (frame_out) *frame_out = frame;
    if (pole_out) *pole_out = pole;
    return out;
}

std::string selections_to_json(const SelectionFile& sel) {
    Json scenes = Json::array();
    for (const auto& s : sel.scenes) scenes.push_back(s);
    return dump(Json{{"version", kFormatVersion}, {"mode", sel.mode}, {"scenes", scenes}});
}

SelectionFile selections_from_json(const std::string& text) {
    const Json j = parse_json(text);
    check_keys(j, {"version", "mode", "scenes"}, "selections file");
    check_version(j);
    SelectionFile sel;
    sel.mode = as_string(field(j, "mode", ""), "mode");
    const Json& scenes = as_array(field(j, "scenes", ""), "scenes");
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string ctx = "scenes[" + std::to_string(i) + "]";
        std::vector<std::size_t> idx;
        for (const auto& v : as_array(scenes[i], ctx)) idx.push_back(as_index(v, ctx));
        sel.scenes.push_back(std::move(idx));
    }
    return sel;
}

std::string metrics_to_json(const MetricsReport& report) {
    Json rows = Json::array();
    for (const auto& m : report.per_threshold) rows.push_back(threshold_json(m));
    return dump(Json{{"version", kFormatVersion}, {"thresholds", rows}, {"mf1", num(report.mf1)}});
}

namespace {

// Derived columns are recomputed from the counts; the stored values must agree.
ThresholdMetrics checked_metrics(double threshold, std::size_t tp, std::size_t fp, std::size_t fn, double precision,
                                 double recall, double f1, const std::string& ctx) {
    ThresholdMetrics m = metrics_from_counts(threshold, tp, fp, fn);
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-8; };
    if (!close(m.precision, precision) || !close(m.recall, recall) || !close(m.f1, f1))
        throw ParseError(ctx + ": precision/recall/f1 disagree with tp/fp/fn");
    return m;
}

double finish_mf1(const MetricsReport& r, double stored) {
    std::size_t found = 0;
    for (double t : standard_iou_thresholds())
        if (r.at(t)) ++found;
    return found == 10 ? mean_f1(r.per_threshold) : stored;
}

}  // namespace

MetricsReport metrics_from_json(const std::string& text) {
    const Json j = parse_json(text);
    check_keys(j, {"version", "thresholds", "mf1"}, "metrics file");
    check_version(j);
    MetricsReport r;
    const Json& rows = as_array(field(j, "thresholds", ""), "thresholds");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string ctx = "thresholds[" + std::to_string(i) + "]";
        const Json& o = rows[i];
        check_keys(o, {"threshold", "tp", "fp", "fn", "precision", "recall", "f1"}, ctx);
        r.per_threshold.push_back(checked_metrics(get_double(o, "threshold", ctx), get_index(o, "tp", ctx),
                                                  get_index(o, "fp", ctx), get_index(o, "fn", ctx),
                                                  get_double(o, "precision", ctx), get_double(o, "recall", ctx),
                                                  get_double(o, "f1", ctx), ctx));
    }
    r.mf1 = finish_mf1(r, get_double(j, "mf1", ""));
    return r;
}

std::string metrics_to_csv(const MetricsReport& report) {
    std::ostringstream os;
    os << "threshold,tp,fp,fn,precision,recall,f1\n";
    for (const auto& m : report.per_threshold)
        os << format_sig9(m.threshold) << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << format_sig9(m.precision)
           << ',' << format_sig9(m.recall) << ',' << format_sig9(m.f1) << '\n';
    os << "mf1,,,,,," << format_sig9(report.mf1) << '\n';
    return os.str();
}

MetricsReport metrics_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "threshold,tp,fp,fn,precision,recall,f1")
        throw ParseError("metrics CSV: line 1: unexpected header");
    MetricsReport r;
    bool have_mf1 = false;
    double stored_mf1 = 0.0;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string ctx = "metrics CSV: line " + std::to_string(line_no);
        if (have_mf1) throw ParseError(ctx + ": data after the mf1 row");
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (cells.size() != 7) throw ParseError(ctx + ": expected 7 columns");
        const auto number = [&](const std::string& s, const char* col) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || *end != '\0') throw ParseError(ctx + ": column '" + col + "' is not a number");
            return v;
        };
        const auto count = [&](const std::string& s, const char* col) {
            const double v = number(s, col);
            if (v < 0.0 || v != std::floor(v)) throw ParseError(ctx + ": column '" + col + "' is not a count");
            return static_cast<std::size_t>(v);
        };
        if (cells[0] == "mf1") {
            stored_mf1 = number(cells[6], "f1");
            have_mf1 = true;
            continue;
        }
        r.per_threshold.push_back(checked_metrics(number(cells[0], "threshold"), count(cells[1], "tp"),
                                                  count(cells[2], "fp"), count(cells[3], "fn"),
                                                  number(cells[4], "precision"), number(cells[5], "recall"),
                                                  number(cells[6], "f1"), ctx));
    }
    if (!have_mf1) throw ParseError("metrics CSV: missing trailing mf1 row");
    r.mf1 = finish_mf1(r, stored_mf1);
    return r;
}

std::string labels_to_json(const PoleGridLabels& labels, const std::vector<Pole>& poles) {
    Json arr = Json::array();
    for (std::size_t j = 0; j < labels.size(); ++j) {
        arr.push_back(Json{{"x", num(poles[j].position.x)},
                           {"y", num(poles[j].position.y)},
                           {"r_hat", std::isfinite(labels.r_hat[j]) ? num(labels.r_hat[j]) : Json(nullptr)},
                           {"theta_hat", num(labels.theta_hat[j])},
                           {"s_hat", static_cast<int>(labels.s_hat[j])}});
    }
    return dump(Json{{"version", kFormatVersion},
                     {"grid", Json::array({labels.grid_rows, labels.grid_cols})},
                     {"frame", "cartesian"},
                     {"poles", arr}});
}

std::string head_weights_to_json(const HeadWeights& w) {
    return dump(Json{{"version", kFormatVersion},
                     {"level_weights", matrix_json(w.level_weights)},
                     {"pool", matrix_json(w.pool)},
                     {"roi", dense_json(w.roi)},
                     {"w_in", matrix_json(w.w_in)},
                     {"w_out", matrix_json(w.w_out)},
                     {"sample", dense_json(w.sample)},
                     {"edge", mlp_json(w.edge)},
                     {"node", mlp_json(w.node)}});
}

HeadWeights head_weights_from_json(const std::string& text) {
    const Json j = parse_json(text);
    check_keys(j, {"version", "level_weights", "pool", "roi", "w_in", "w_out", "sample", "edge", "node"},
               "head weights");
    check_version(j);
    HeadWeights w;
    w.level_weights = matrix_from(field(j, "level_weights", ""), "level_weights");
    w.pool = matrix_from(field(j, "pool", ""), "pool");
    w.roi = dense_from(field(j, "roi", ""), "roi");
    w.w_in = matrix_from(field(j, "w_in", ""), "w_in");
    w.w_out = matrix_from(field(j, "w_out", ""), "w_out");
    w.sample = dense_from(field(j, "sample", ""), "sample");
    w.edge = mlp_from(field(j, "edge", ""), "edge");
    w.node = mlp_from(field(j, "node", ""), "node");
    try {
        w.validate();
    } catch (const ShapeError& e) {
        throw ParseError(std::string("head weights: ") + e.what());
    }
    return w;
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
    const Json j = parse_json(text);
    check_keys(j, {"scene", "scene_count", "candidates", "modes", "thresholds", "regime", "head", "head_seed", "eval",
                   "seed"},
               "config");
    PipelineConfig cfg;
    if (auto it = j.find("scene"); it != j.end()) {
        const Json& s = *it;
        check_keys(s, {"kind", "lane_count", "frame", "curvature", "top_fraction", "branch_fraction",
                       "fork_separation", "double_lane_separation", "w_base"},
                   "scene");
        std::string kind = "sparse";
        maybe(s, "kind", "scene", kind);
        if (kind == "sparse")
            cfg.scene.kind = SceneKind::sparse;
        else if (kind == "dense")
            cfg.scene.kind = SceneKind::dense;
        else
            throw ParseError("field 'scene.kind': expected \"sparse\" or \"dense\"");
        maybe(s, "lane_count", "scene", cfg.scene.lane_count);
        if (auto f = s.find("frame"); f != s.end()) cfg.scene.frame = frame_from(*f, "scene.frame");
        if (auto c = s.find("curvature"); c != s.end()) {
            const auto v = vector_from(*c, "scene.curvature");
            if (v.size() != 2) throw ParseError("field 'scene.curvature': expected [min, max]");
            cfg.scene.curvature_min = v[0];
            cfg.scene.curvature_max = v[1];
        }
        maybe(s, "top_fraction", "scene", cfg.scene.top_fraction);
        maybe(s, "branch_fraction", "scene", cfg.scene.branch_fraction);
        maybe(s, "fork_separation", "scene", cfg.scene.fork_separation);
        maybe(s, "double_lane_separation", "scene", cfg.scene.double_lane_separation);
        maybe(s, "w_base", "scene", cfg.scene.w_base);
    }
    maybe(j, "scene_count", "", cfg.scene_count);
    if (auto it = j.find("candidates"); it != j.end()) {
        const Json& c = *it;
        check_keys(c, {"per_gt", "sigma_theta", "sigma_r", "sigma_x", "sigma_s", "score_noise", "background",
                       "background_cap"},
                   "candidates");
        maybe(c, "per_gt", "candidates", cfg.candidates.per_gt);
        maybe(c, "sigma_theta", "candidates", cfg.candidates.sigma_theta);
        maybe(c, "sigma_r", "candidates", cfg.candidates.sigma_r);
        maybe(c, "sigma_x", "candidates", cfg.candidates.sigma_x);
        maybe(c, "sigma_s", "candidates", cfg.candidates.sigma_s);
        maybe(c, "score_noise", "candidates", cfg.candidates.score_noise);
        maybe(c, "background", "candidates", cfg.candidates.background);
        maybe(c, "background_cap", "candidates", cfg.candidates.background_cap);
    }
    if (auto it = j.find("modes"); it != j.end()) {
        const Json& arr = as_array(*it, "modes");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string ctx = "modes[" + std::to_string(i) + "]";
            check_keys(arr[i], {"label", "kind", "w_base"}, ctx);
            ModeSpec m;
            const std::string kind = as_string(field(arr[i], "kind", ctx), path(ctx, "kind"));
            if (kind == "sequential")
                m.kind = ModeKind::sequential;
            else if (kind == "fast_geometric")
                m.kind = ModeKind::fast_geometric;
            else if (kind == "dual_confidence")
                m.kind = ModeKind::dual_confidence;
            else
                throw ParseError("field '" + path(ctx, "kind") + "': unknown mode '" + kind + "'");
            maybe(arr[i], "w_base", ctx, m.w_base);
            m.label = m.kind == ModeKind::sequential ? sequential_preset(m.w_base).label : kind;
            maybe(arr[i], "label", ctx, m.label);
            cfg.modes.push_back(m);
        }
    }
    if (auto it = j.find("thresholds"); it != j.end()) {
        check_keys(*it, {"tau_theta", "lambda_g", "tau_d", "tau_o2m", "tau_o2o"}, "thresholds");
        maybe(*it, "tau_theta", "thresholds", cfg.thresholds.tau_theta);
        maybe(*it, "lambda_g", "thresholds", cfg.thresholds.lambda_g);
        maybe(*it, "tau_d", "thresholds", cfg.thresholds.tau_d);
        maybe(*it, "tau_o2m", "thresholds", cfg.thresholds.tau_o2m);
        maybe(*it, "tau_o2o", "thresholds", cfg.thresholds.tau_o2o);
    }
    if (auto it = j.find("regime"); it != j.end()) {
        const std::string r = as_string(*it, "regime");
        if (r == "oracle")
            cfg.regime = ScoreRegime::oracle;
        else if (r == "random_head")
            cfg.regime = ScoreRegime::random_head;
        else
            throw ParseError("field 'regime': expected \"oracle\" or \"random_head\"");
    }
    if (auto it = j.find("head"); it != j.end()) {
        check_keys(*it, {"channels", "d_r", "d_n"}, "head");
        maybe(*it, "channels", "head", cfg.head.channels);
        maybe(*it, "d_r", "head", cfg.head.d_r);
        maybe(*it, "d_n", "head", cfg.head.d_n);
    }
    maybe(j, "head_seed", "", cfg.head_seed);
    if (auto it = j.find("eval"); it != j.end()) {
        check_keys(*it, {"w_base", "thresholds"}, "eval");
        maybe(*it, "w_base", "eval", cfg.eval_w_base);
        if (auto t = it->find("thresholds"); t != it->end()) cfg.eval_thresholds = vector_from(*t, "eval.thresholds");
    }
    maybe(j, "seed", "", cfg.seed);
    if (cfg.modes.empty())
        cfg.modes = {sequential_preset(50.0), sequential_preset(15.0),
                     ModeSpec{"fast_geometric", ModeKind::fast_geometric, 15.0},
                     ModeSpec{"dual_confidence", ModeKind::dual_confidence, 15.0}};
    return cfg;
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    Json modes = Json::array();
    for (const auto& m : cfg.modes)
        modes.push_back(Json{{"label", m.label}, {"kind", kind_name(m.kind)}, {"w_base", num(m.w_base)}});
    const Json j{
        {"scene",
         {{"kind", cfg.scene.kind == SceneKind::dense ? "dense" : "sparse"},
          {"lane_count", cfg.scene.lane_count},
          {"frame", frame_json(cfg.scene.frame)},
          {"curvature", Json::array({num(cfg.scene.curvature_min), num(cfg.scene.curvature_max)})},
          {"top_fraction", num(cfg.scene.top_fraction)},
          {"branch_fraction", num(cfg.scene.branch_fraction)},
          {"fork_separation", num(cfg.scene.fork_separation)},
          {"double_lane_separation", num(cfg.scene.double_lane_separation)},
          {"w_base", num(cfg.scene.w_base)}}},
        {"scene_count", cfg.scene_count},
        {"candidates",
         {{"per_gt", cfg.candidates.per_gt},
          {"sigma_theta", num(cfg.candidates.sigma_theta)},
          {"sigma_r", num(cfg.candidates.sigma_r)},
          {"sigma_x", num(cfg.candidates.sigma_x)},
          {"sigma_s", num(cfg.candidates.sigma_s)},
          {"score_noise", num(cfg.candidates.score_noise)},
          {"background", cfg.candidates.background},
          {"background_cap", num(cfg.candidates.background_cap)}}},
        {"modes", modes},
        {"thresholds",
         {{"tau_theta", num(cfg.thresholds.tau_theta)},
          {"lambda_g", num(cfg.thresholds.lambda_g)},
          {"tau_d", num(cfg.thresholds.tau_d)},
          {"tau_o2m", num(cfg.thresholds.tau_o2m)},
          {"tau_o2o", num(cfg.thresholds.tau_o2o)}}},
        {"regime", cfg.regime == ScoreRegime::oracle ? "oracle" : "random_head"},
        {"head", {{"channels", cfg.head.channels}, {"d_r", cfg.head.d_r}, {"d_n", cfg.head.d_n}}},
        {"head_seed", cfg.head_seed},
        {"eval", {{"w_base", num(cfg.eval_w_base)}, {"thresholds", vector_json(cfg.eval_thresholds)}}},
        {"seed", cfg.seed}};
    return dump(j);
}

std::string bench_to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "# suppression post-processing only; network inference is not included\n";
    os << "mode,k,median_seconds,selected\n";
    for (const auto& r : rows) os << r.mode << ',' << r.k << ',' << format_sig9(r.median_seconds) << ',' << r.selected << '\n';
    return os.str();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + p.string() + "'");
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << contents;
    if (!out) throw IoError("failed writing '" + p.string() + "'");
}

}  // namespace polarkit
