#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tangram/geometry.hpp"
#include "tangram/raster.hpp"

namespace tangram {

enum class Split { Single, TwoPiece };
enum class SceneSource { Synthetic, SvgImport };

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct CanvasSpec {
    std::string frame = "unit10";
    int raster = kDefaultResolution;
};

struct SceneAnnotation {
    std::string scene_id;
    std::vector<Placement> pieces; // length 1 or 2
    CanvasSpec canvas;
    Split split = Split::Single;
    SceneSource source = SceneSource::Synthetic;
};

// Annotation JSON schema: numbers are written with <= 6 decimal places;
// `scale` is accepted as an alias of `size` on read.
nlohmann::json annotation_to_json(const SceneAnnotation& a);
SceneAnnotation annotation_from_json(const nlohmann::json& j);
SceneAnnotation load_annotation(const std::filesystem::path& path);
void save_annotation(const std::filesystem::path& path, const SceneAnnotation& a);

enum class TaskMode { Pos, Angle, Size, All, TwoPos, TwoAngle, TwoPosAngle };

std::string_view to_string(TaskMode m);
std::optional<TaskMode> task_mode_from_string(std::string_view s);
bool mode_is_two_piece(TaskMode m);
bool mode_has_position(TaskMode m);
bool mode_has_angle(TaskMode m);
bool mode_has_size(TaskMode m);
// Field names the proposer must emit for this mode.
std::vector<std::string> target_field_names(TaskMode m);

struct TaskSpec {
    std::string scene_id;
    TaskMode mode = TaskMode::Pos;
    int piece_count = 1;
};

// Throws std::invalid_argument when the mode needs a different piece count.
TaskSpec make_task(const SceneAnnotation& a, TaskMode mode);

// Predicted values for the target fields; anything unset is taken from GT.
struct PieceFields {
    std::optional<Vec2> pos;
    std::optional<double> angle;
    std::optional<double> size;
};

struct FieldSet {
    std::vector<PieceFields> pieces;
    bool clamped = false; // a position was clamped into the canvas at parse time
};

bool fields_cover_mode(const FieldSet& f, TaskMode mode, int piece_count);
std::vector<Placement> merge_fields(const SceneAnnotation& gt, const FieldSet& f);
// GT values of the mode's target fields, as a FieldSet (exemplar answers, oracle).
FieldSet gt_fields(const SceneAnnotation& a, TaskMode mode);

struct FitResult {
    PieceType piece_type;
    Placement placement;
    double residual = 0.0; // mean vertex distance, canvas units
};

struct UnfittablePolygon : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Recovers (type, pos, angle, size, flip) from a realized polygon. All tangram
// triangles are similar, so without a hint the size class is resolved toward a
// size multiplier closest to 1; pass `hint` when the source records the type.
FitResult fit_template(const Polygon& poly, std::optional<PieceType> hint = std::nullopt);

struct SynthesisConfig {
    int count = 1;
    Split split = Split::Single;
    std::vector<PieceType> piece_filter; // empty = all seven
    std::uint64_t seed = 0;
    double pos_min = 2.0, pos_max = 8.0;
    double size_min = 0.8, size_max = 1.8;
    double max_overlap_frac = 0.02; // of the smaller piece's area
    int max_attempts = 100;
    std::string id_prefix = "scene";
    int raster = kDefaultResolution;
};

// Seeded, reproducible scene generation; rejection-samples until every piece
// lies strictly inside the canvas and two-piece scenes satisfy the overlap cap.
std::vector<SceneAnnotation> generate_synthetic(const SynthesisConfig& cfg);

RasterMask scene_mask(const SceneAnnotation& a, int resolution);
// Opaque silhouette: black pieces on a white background.
std::string render_scene_png(const SceneAnnotation& a, int resolution);

} // namespace tangram
