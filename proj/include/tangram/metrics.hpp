#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tangram/dataset.hpp"
#include "tangram/geometry.hpp"

namespace tangram {

struct ScoringConfig {
    int dilation_px = 1;
    int resolution = kDefaultResolution;
    bool symmetry_aware_angle = true;
};

// Sentinels recorded for parse failures, so failed scenes drag the means the
// way a worst answer would instead of silently dropping out.
inline constexpr double kL2Sentinel = 14.142135623730951; // corner-to-corner
inline constexpr double kSizeErrSentinel = 1.0;

struct MetricRecord {
    std::string scene_id;
    TaskMode mode = TaskMode::Pos;
    std::vector<double> l2_pos;        // per piece, canvas units
    std::vector<double> angle_err;     // per piece, degrees (symmetry-aware)
    std::vector<double> angle_err_raw; // per piece, degrees
    std::vector<double> size_err;      // per piece, relative
    double iou = 0.0;
    std::optional<double> union_iou_value;      // two-piece scenes
    std::optional<double> overlap_penalty_value; // between the two predicted pieces
    bool parse_failed = false;
    std::optional<std::string> error; // scene-level failure note
};

double l2_error(Vec2 pred_pos, Vec2 gt_pos);
// Absolute angular deviation in degrees; symmetry_aware folds by the piece's
// rotational symmetry period (square 90, parallelogram 180, triangles 360).
double angle_error(double pred_deg, double gt_deg, PieceType type, bool symmetry_aware);
double size_error(double pred_s, double gt_s);
// overlap_area normalized by the smaller piece's area, in [0,1].
double overlap_penalty(const Placement& p1, const Placement& p2);

MetricRecord score_prediction(const TaskSpec& task, const SceneAnnotation& gt,
                              const FieldSet& pred, const ScoringConfig& cfg = {});
MetricRecord failed_prediction(const TaskSpec& task, const SceneAnnotation& gt,
                               const std::string& reason);

nlohmann::json metric_record_to_json(const MetricRecord& r);
MetricRecord metric_record_from_json(const nlohmann::json& j);

struct GroupKey {
    std::string model;
    std::string mode;
    std::string split;
    std::string piece_filter;
};

struct MetricStat {
    int n = 0;
    double mean = 0.0;
    double ci95_halfwidth = 0.0; // 1.96 * stddev / sqrt(n), 0 when n <= 1
};

struct Aggregate {
    GroupKey key;
    int n = 0;
    int parse_failures = 0;
    MetricStat iou;
    MetricStat l2_pos;
    MetricStat angle_err;
    MetricStat size_err;
    MetricStat union_iou_stat;
    MetricStat overlap_penalty_stat;
};

Aggregate aggregate(std::span<const MetricRecord> records, const GroupKey& key);
nlohmann::json aggregate_to_json(const Aggregate& a);
std::string render_aggregate_table(std::span<const Aggregate> rows);

} // namespace tangram
