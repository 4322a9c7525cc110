#include "tangram/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tangram/raster.hpp"
#include "tangram/util.hpp"

namespace tangram {

double l2_error(Vec2 pred_pos, Vec2 gt_pos) { return norm(pred_pos - gt_pos); }

double angle_error(double pred_deg, double gt_deg, PieceType type, bool symmetry_aware) {
    const double period = symmetry_aware ? symmetry_period_deg(type) : 360.0;
    double d = std::fmod(std::abs(pred_deg - gt_deg), period);
    return std::min(d, period - d);
}

double size_error(double pred_s, double gt_s) {
    if (!(pred_s > 0.0) || !(gt_s > 0.0)) {
        throw std::invalid_argument("sizes must be positive");
    }
    return std::abs(pred_s - gt_s) / gt_s;
}

double overlap_penalty(const Placement& p1, const Placement& p2) {
    const double smaller =
        std::min(polygon_area(realize(p1)), polygon_area(realize(p2)));
    if (smaller <= 0.0) {
        return 0.0;
    }
    return overlap_area(p1, p2) / smaller;
}

MetricRecord score_prediction(const TaskSpec& task, const SceneAnnotation& gt,
                              const FieldSet& pred, const ScoringConfig& cfg) {
    if (!fields_cover_mode(pred, task.mode, task.piece_count)) {
        throw std::invalid_argument("prediction fields do not cover mode " +
                                    std::string(to_string(task.mode)));
    }
    MetricRecord rec;
    rec.scene_id = task.scene_id;
    rec.mode = task.mode;

    const std::vector<Placement> merged = merge_fields(gt, pred);
    for (size_t i = 0; i < merged.size(); ++i) {
        const Placement& p = merged[i];
        const Placement& g = gt.pieces[i];
        if (mode_has_position(task.mode)) {
            rec.l2_pos.push_back(l2_error(p.pos, g.pos));
        }
        if (mode_has_angle(task.mode)) {
            rec.angle_err.push_back(
                angle_error(p.angle, g.angle, g.piece_type, cfg.symmetry_aware_angle));
            rec.angle_err_raw.push_back(angle_error(p.angle, g.angle, g.piece_type, false));
        }
        if (mode_has_size(task.mode)) {
            rec.size_err.push_back(size_error(p.size, g.size));
        }
    }

    if (task.piece_count == 1) {
        rec.iou = raster_iou(rasterize(realize(merged[0]), cfg.resolution),
                             rasterize(realize(gt.pieces[0]), cfg.resolution), cfg.dilation_px);
    } else {
        const double u = union_iou(merged, gt.pieces, cfg.dilation_px, cfg.resolution);
        rec.iou = u;
        rec.union_iou_value = u;
        rec.overlap_penalty_value = overlap_penalty(merged[0], merged[1]);
    }
    return rec;
}

MetricRecord failed_prediction(const TaskSpec& task, const SceneAnnotation& gt,
                               const std::string& reason) {
    MetricRecord rec;
    rec.scene_id = task.scene_id;
    rec.mode = task.mode;
    rec.parse_failed = true;
    rec.error = reason;
    rec.iou = 0.0;
    for (int i = 0; i < task.piece_count; ++i) {
        if (mode_has_position(task.mode)) {
            rec.l2_pos.push_back(kL2Sentinel);
        }
        if (mode_has_angle(task.mode)) {
            const double period =
                symmetry_period_deg(gt.pieces[static_cast<size_t>(i)].piece_type);
            rec.angle_err.push_back(period / 2.0);
            rec.angle_err_raw.push_back(180.0);
        }
        if (mode_has_size(task.mode)) {
            rec.size_err.push_back(kSizeErrSentinel);
        }
    }
    if (task.piece_count == 2) {
        rec.union_iou_value = 0.0;
        rec.overlap_penalty_value = 0.0;
    }
    return rec;
}

nlohmann::json metric_record_to_json(const MetricRecord& r) {
    nlohmann::json j{
        {"scene_id", r.scene_id},
        {"mode", std::string(to_string(r.mode))},
        {"iou", r.iou},
        {"parse_failed", r.parse_failed},
    };
    if (!r.l2_pos.empty()) j["l2_pos"] = r.l2_pos;
    if (!r.angle_err.empty()) j["angle_err"] = r.angle_err;
    if (!r.angle_err_raw.empty()) j["angle_err_raw"] = r.angle_err_raw;
    if (!r.size_err.empty()) j["size_err"] = r.size_err;
    if (r.union_iou_value) j["union_iou"] = *r.union_iou_value;
    if (r.overlap_penalty_value) j["overlap_penalty"] = *r.overlap_penalty_value;
    if (r.error) j["error"] = *r.error;
    return j;
}

MetricRecord metric_record_from_json(const nlohmann::json& j) {
    MetricRecord r;
    r.scene_id = j.at("scene_id").get<std::string>();
    if (const auto m = task_mode_from_string(j.at("mode").get<std::string>())) {
        r.mode = *m;
    } else {
        throw std::invalid_argument("unknown mode in metric record");
    }
    r.iou = j.at("iou").get<double>();
    r.parse_failed = j.value("parse_failed", false);
    if (j.contains("l2_pos")) r.l2_pos = j["l2_pos"].get<std::vector<double>>();
    if (j.contains("angle_err")) r.angle_err = j["angle_err"].get<std::vector<double>>();
    if (j.contains("angle_err_raw"))
        r.angle_err_raw = j["angle_err_raw"].get<std::vector<double>>();
    if (j.contains("size_err")) r.size_err = j["size_err"].get<std::vector<double>>();
    if (j.contains("union_iou")) r.union_iou_value = j["union_iou"].get<double>();
    if (j.contains("overlap_penalty"))
        r.overlap_penalty_value = j["overlap_penalty"].get<double>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    return r;
}

namespace {

// Mean and 95% CI halfwidth under the normal approximation, computed with
// compensated sums so record ordering cannot perturb the result.
MetricStat stat_of(const std::vector<double>& values) {
    MetricStat s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) {
        return s;
    }
    KahanSum sum;
    for (double v : values) {
        sum.add(v);
    }
    s.mean = sum.value() / s.n;
    if (s.n > 1) {
        KahanSum sq;
        for (double v : values) {
            const double d = v - s.mean;
            sq.add(d * d);
        }
        const double stddev = std::sqrt(sq.value() / (s.n - 1));
        s.ci95_halfwidth = 1.96 * stddev / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

nlohmann::json stat_to_json(const MetricStat& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"ci95", s.ci95_halfwidth}};
}

} // namespace

Aggregate aggregate(std::span<const MetricRecord> records, const GroupKey& key) {
    Aggregate a;
    a.key = key;
    a.n = static_cast<int>(records.size());

    std::vector<double> iou, l2, ang, sz, uni, ovp;
    for (const MetricRecord& r : records) {
        iou.push_back(r.iou); // parse failures count as 0
        if (r.parse_failed) {
            ++a.parse_failures;
        }
        for (double v : r.l2_pos) l2.push_back(v);
        for (double v : r.angle_err) ang.push_back(v);
        for (double v : r.size_err) sz.push_back(v);
        if (r.union_iou_value) uni.push_back(*r.union_iou_value);
        if (r.overlap_penalty_value) ovp.push_back(*r.overlap_penalty_value);
    }
    a.iou = stat_of(iou);
    a.l2_pos = stat_of(l2);
    a.angle_err = stat_of(ang);
    a.size_err = stat_of(sz);
    a.union_iou_stat = stat_of(uni);
    a.overlap_penalty_stat = stat_of(ovp);
    return a;
}

nlohmann::json aggregate_to_json(const Aggregate& a) {
    return {
        {"group",
         {{"model", a.key.model},
          {"mode", a.key.mode},
          {"split", a.key.split},
          {"piece_filter", a.key.piece_filter}}},
        {"n", a.n},
        {"parse_failures", a.parse_failures},
        {"iou", stat_to_json(a.iou)},
        {"l2_pos", stat_to_json(a.l2_pos)},
        {"angle_err", stat_to_json(a.angle_err)},
        {"size_err", stat_to_json(a.size_err)},
        {"union_iou", stat_to_json(a.union_iou_stat)},
        {"overlap_penalty", stat_to_json(a.overlap_penalty_stat)},
    };
}

std::string render_aggregate_table(std::span<const Aggregate> rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %-14s %6s %18s %18s %14s %14s\n", "model", "mode",
                  "n", "iou (mean+-ci)", "l2 (mean+-ci)", "angle (deg)", "size (rel)");
    out += line;
    out += std::string(112, '-') + "\n";
    for (const Aggregate& a : rows) {
        std::snprintf(line, sizeof(line), "%-24s %-14s %6d %9.4f+-%6.4f %9.4f+-%6.4f %7.2f+-%5.2f %7.4f+-%5.4f\n",
                      a.key.model.c_str(), a.key.mode.c_str(), a.n, a.iou.mean,
                      a.iou.ci95_halfwidth, a.l2_pos.mean, a.l2_pos.ci95_halfwidth,
                      a.angle_err.mean, a.angle_err.ci95_halfwidth, a.size_err.mean,
                      a.size_err.ci95_halfwidth);
        out += line;
    }
    return out;
}

} // namespace tangram
