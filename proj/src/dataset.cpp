#include "tangram/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tangram/png.hpp"
#include "tangram/util.hpp"

namespace tangram {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Template vertex order as realize() uses it: mirrored and re-reversed to CCW
// when flipped.
Polygon oriented_template(const PieceTemplate& tpl, bool flip) {
    Polygon out = tpl.vertices;
    if (flip) {
        for (auto& v : out) {
            v.x = -v.x;
        }
        std::reverse(out.begin(), out.end());
    }
    return out;
}

struct PoseMatch {
    double angle_deg = 0.0;
    bool flip = false;
    double residual = 0.0;
};

// Best rigid alignment of poly onto size * R(angle) * template over all cyclic
// vertex correspondences and both chiralities (2n candidates).
PoseMatch match_pose(const Polygon& poly, const PieceTemplate& tpl, Vec2 centroid, double size) {
    const size_t n = poly.size();
    PoseMatch best;
    best.residual = std::numeric_limits<double>::infinity();

    for (int flip = 0; flip < 2; ++flip) {
        const Polygon t = oriented_template(tpl, flip != 0);
        for (size_t shift = 0; shift < n; ++shift) {
            double sum_cross = 0.0;
            double sum_dot = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const Vec2 p = poly[i] - centroid;
                const Vec2 q = t[(i + shift) % n];
                sum_cross += cross(q, p);
                sum_dot += dot(q, p);
            }
            const double theta = std::atan2(sum_cross, sum_dot);
            const double c = std::cos(theta);
            const double s = std::sin(theta);
            double dist = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const Vec2 p = poly[i] - centroid;
                const Vec2 q = t[(i + shift) % n];
                const Vec2 r{size * (c * q.x - s * q.y), size * (s * q.x + c * q.y)};
                dist += norm(p - r);
            }
            dist /= static_cast<double>(n);
            if (dist < best.residual) {
                best.residual = dist;
                best.angle_deg = wrap_angle_deg(theta * 180.0 / kPi);
                best.flip = flip != 0;
            }
        }
    }
    return best;
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool inside_canvas(const Polygon& poly) {
    for (const Vec2& v : poly) {
        if (!(v.x > 0.0 && v.x < kCanvasSide && v.y > 0.0 && v.y < kCanvasSide)) {
            return false;
        }
    }
    return true;
}

} // namespace

std::string_view to_string(Split s) {
    return s == Split::Single ? "single" : "two-piece";
}

std::optional<Split> split_from_string(std::string_view s) {
    if (s == "single") return Split::Single;
    if (s == "two-piece") return Split::TwoPiece;
    return std::nullopt;
}

nlohmann::json annotation_to_json(const SceneAnnotation& a) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const Placement& p : a.pieces) {
        pieces.push_back({
            {"type", to_string(p.piece_type)},
            {"pos", {round_decimals(p.pos.x, 6), round_decimals(p.pos.y, 6)}},
            {"angle", round_decimals(p.angle, 6)},
            {"size", round_decimals(p.size, 6)},
            {"flip", p.flip},
        });
    }
    return {
        {"scene_id", a.scene_id},
        {"split", std::string(to_string(a.split))},
        {"pieces", pieces},
        {"canvas", {{"frame", a.canvas.frame}, {"raster", a.canvas.raster}}},
    };
}

SceneAnnotation annotation_from_json(const nlohmann::json& j) {
    SceneAnnotation a;
    a.scene_id = j.at("scene_id").get<std::string>();
    const auto split = split_from_string(j.at("split").get<std::string>());
    if (!split) {
        throw std::invalid_argument("unknown split in annotation: " + j.at("split").dump());
    }
    a.split = *split;
    if (j.contains("canvas")) {
        a.canvas.frame = j["canvas"].value("frame", "unit10");
        a.canvas.raster = j["canvas"].value("raster", kDefaultResolution);
    }
    for (const auto& pj : j.at("pieces")) {
        Placement p;
        const auto type = piece_type_from_string(pj.at("type").get<std::string>());
        if (!type) {
            throw std::invalid_argument("unknown piece type: " + pj.at("type").dump());
        }
        p.piece_type = *type;
        p.pos = {pj.at("pos").at(0).get<double>(), pj.at("pos").at(1).get<double>()};
        p.angle = wrap_angle_deg(pj.at("angle").get<double>());
        // The annotation schema uses `size`; `scale` appears in older files.
        if (pj.contains("size")) {
            p.size = pj.at("size").get<double>();
        } else if (pj.contains("scale")) {
            p.size = pj.at("scale").get<double>();
        } else {
            throw std::invalid_argument("piece is missing size/scale");
        }
        if (!(p.size > 0.0)) {
            throw std::invalid_argument("piece size must be positive");
        }
        p.flip = pj.value("flip", false);
        a.pieces.push_back(p);
    }
    if (a.pieces.empty() || a.pieces.size() > 2) {
        throw std::invalid_argument("annotation must contain 1 or 2 pieces");
    }
    if ((a.split == Split::Single) != (a.pieces.size() == 1)) {
        throw std::invalid_argument("split is inconsistent with the piece count");
    }
    return a;
}

SceneAnnotation load_annotation(const std::filesystem::path& path) {
    return annotation_from_json(nlohmann::json::parse(read_file(path)));
}

void save_annotation(const std::filesystem::path& path, const SceneAnnotation& a) {
    write_file_atomic(path, annotation_to_json(a).dump(2) + "\n");
}

std::string_view to_string(TaskMode m) {
    switch (m) {
        case TaskMode::Pos: return "pos";
        case TaskMode::Angle: return "angle";
        case TaskMode::Size: return "size";
        case TaskMode::All: return "all";
        case TaskMode::TwoPos: return "two-pos";
        case TaskMode::TwoAngle: return "two-angle";
        case TaskMode::TwoPosAngle: return "two-pos-angle";
    }
    return "unknown";
}

std::optional<TaskMode> task_mode_from_string(std::string_view s) {
    for (TaskMode m : {TaskMode::Pos, TaskMode::Angle, TaskMode::Size, TaskMode::All,
                       TaskMode::TwoPos, TaskMode::TwoAngle, TaskMode::TwoPosAngle}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    return std::nullopt;
}

bool mode_is_two_piece(TaskMode m) {
    return m == TaskMode::TwoPos || m == TaskMode::TwoAngle || m == TaskMode::TwoPosAngle;
}

bool mode_has_position(TaskMode m) {
    return m == TaskMode::Pos || m == TaskMode::All || m == TaskMode::TwoPos ||
           m == TaskMode::TwoPosAngle;
}

bool mode_has_angle(TaskMode m) {
    return m == TaskMode::Angle || m == TaskMode::All || m == TaskMode::TwoAngle ||
           m == TaskMode::TwoPosAngle;
}

bool mode_has_size(TaskMode m) { return m == TaskMode::Size || m == TaskMode::All; }

std::vector<std::string> target_field_names(TaskMode m) {
    std::vector<std::string> names;
    if (mode_has_position(m)) names.emplace_back("pos");
    if (mode_has_angle(m)) names.emplace_back("angle");
    if (mode_has_size(m)) names.emplace_back("size");
    return names;
}

TaskSpec make_task(const SceneAnnotation& a, TaskMode mode) {
    const int need = mode_is_two_piece(mode) ? 2 : 1;
    if (static_cast<int>(a.pieces.size()) != need) {
        throw std::invalid_argument("mode " + std::string(to_string(mode)) + " needs " +
                                    std::to_string(need) + " piece(s), scene " + a.scene_id +
                                    " has " + std::to_string(a.pieces.size()));
    }
    return TaskSpec{a.scene_id, mode, need};
}

bool fields_cover_mode(const FieldSet& f, TaskMode mode, int piece_count) {
    if (static_cast<int>(f.pieces.size()) != piece_count) {
        return false;
    }
    for (const PieceFields& pf : f.pieces) {
        if (pf.pos.has_value() != mode_has_position(mode)) return false;
        if (pf.angle.has_value() != mode_has_angle(mode)) return false;
        if (pf.size.has_value() != mode_has_size(mode)) return false;
    }
    return true;
}

std::vector<Placement> merge_fields(const SceneAnnotation& gt, const FieldSet& f) {
    if (f.pieces.size() != gt.pieces.size()) {
        throw std::invalid_argument("field set arity does not match the scene");
    }
    std::vector<Placement> out = gt.pieces;
    for (size_t i = 0; i < out.size(); ++i) {
        const PieceFields& pf = f.pieces[i];
        if (pf.pos) out[i].pos = *pf.pos;
        if (pf.angle) out[i].angle = wrap_angle_deg(*pf.angle);
        if (pf.size) out[i].size = *pf.size;
    }
    return out;
}

FieldSet gt_fields(const SceneAnnotation& a, TaskMode mode) {
    FieldSet f;
    for (const Placement& p : a.pieces) {
        PieceFields pf;
        if (mode_has_position(mode)) pf.pos = p.pos;
        if (mode_has_angle(mode)) pf.angle = p.angle;
        if (mode_has_size(mode)) pf.size = p.size;
        f.pieces.push_back(pf);
    }
    return f;
}

FitResult fit_template(const Polygon& poly, std::optional<PieceType> hint) {
    const size_t n = poly.size();
    if (n != 3 && n != 4) {
        throw UnfittablePolygon("polygon has " + std::to_string(n) +
                                " vertices; tangram pieces have 3 or 4");
    }
    const double area = polygon_area(poly);
    if (!(area > 0.0)) {
        throw UnfittablePolygon("degenerate polygon");
    }
    const Vec2 centroid = polygon_centroid(poly);

    std::vector<PieceType> candidates;
    if (hint) {
        candidates.push_back(*hint);
    } else if (n == 3) {
        candidates = {PieceType::LargeTriangle1, PieceType::MediumTriangle,
                      PieceType::SmallTriangle1};
    } else {
        candidates = {PieceType::Square, PieceType::Parallelogram};
    }

    bool found = false;
    FitResult best{};
    double best_size_key = std::numeric_limits<double>::infinity();
    for (PieceType type : candidates) {
        const PieceTemplate& tpl = template_of(type);
        if (tpl.vertices.size() != n) {
            continue;
        }
        const double size = std::sqrt(area / tpl.area);
        const PoseMatch m = match_pose(poly, tpl, centroid, size);
        if (m.residual > 0.05 * size) {
            continue;
        }
        // Triangles are all similar; prefer the size class nearest a unit
        // multiplier unless the caller pinned the type.
        const double size_key = std::abs(std::log(size));
        if (!found || m.residual < best.residual - 1e-12 ||
            (std::abs(m.residual - best.residual) <= 1e-12 && size_key < best_size_key)) {
            found = true;
            best_size_key = size_key;
            best.piece_type = type;
            best.placement =
                Placement{type, centroid, m.angle_deg, size, m.flip};
            best.residual = m.residual;
        }
    }
    if (!found) {
        throw UnfittablePolygon("no tangram template matches the polygon");
    }
    return best;
}

std::vector<SceneAnnotation> generate_synthetic(const SynthesisConfig& cfg) {
    if (cfg.count < 1) {
        throw std::invalid_argument("scene count must be >= 1");
    }
    std::vector<PieceType> types = cfg.piece_filter;
    if (types.empty()) {
        types.assign(kAllPieceTypes.begin(), kAllPieceTypes.end());
    }

    const int piece_count = cfg.split == Split::TwoPiece ? 2 : 1;
    std::vector<SceneAnnotation> scenes;
    scenes.reserve(cfg.count);
    for (int index = 0; index < cfg.count; ++index) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s-%06d", cfg.id_prefix.c_str(), index);
        std::mt19937_64 rng(stream_seed(cfg.seed, id));

        SceneAnnotation a;
        a.scene_id = id;
        a.split = cfg.split;
        a.canvas.raster = cfg.raster;
        a.source = SceneSource::Synthetic;

        bool ok = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
            a.pieces.clear();
            for (int k = 0; k < piece_count; ++k) {
                Placement p;
                p.piece_type = types[std::uniform_int_distribution<size_t>(0, types.size() - 1)(rng)];
                p.pos = {uniform_in(rng, cfg.pos_min, cfg.pos_max),
                         uniform_in(rng, cfg.pos_min, cfg.pos_max)};
                p.angle = uniform_in(rng, 0.0, 360.0);
                p.size = uniform_in(rng, cfg.size_min, cfg.size_max);
                p.flip = is_chiral(p.piece_type) && (rng() & 1u);
                a.pieces.push_back(p);
            }
            ok = std::all_of(a.pieces.begin(), a.pieces.end(),
                             [](const Placement& p) { return inside_canvas(realize(p)); });
            if (ok && piece_count == 2) {
                const double min_area = std::min(polygon_area(realize(a.pieces[0])),
                                                 polygon_area(realize(a.pieces[1])));
                ok = overlap_area(a.pieces[0], a.pieces[1]) <= cfg.max_overlap_frac * min_area;
            }
        }
        if (!ok) {
            throw std::runtime_error("rejection sampling exhausted for scene " + a.scene_id);
        }
        scenes.push_back(std::move(a));
    }
    return scenes;
}

RasterMask scene_mask(const SceneAnnotation& a, int resolution) {
    std::vector<Polygon> polys;
    polys.reserve(a.pieces.size());
    for (const Placement& p : a.pieces) {
        polys.push_back(realize(p));
    }
    return rasterize(polys, resolution);
}

std::string render_scene_png(const SceneAnnotation& a, int resolution) {
    const RasterMask mask = scene_mask(a, resolution);
    std::vector<std::uint8_t> pixels(static_cast<size_t>(resolution) * resolution, 255);
    for (int row = 0; row < resolution; ++row) {
        for (int col = 0; col < resolution; ++col) {
            if (mask.test(row, col)) {
                pixels[static_cast<size_t>(row) * resolution + col] = 0;
            }
        }
    }
    return encode_gray_png(pixels, resolution, resolution);
}

} // namespace tangram
