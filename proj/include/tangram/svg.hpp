#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tangram/dataset.hpp"
#include "tangram/geometry.hpp"

namespace tangram {

struct SvgParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for declared-out-of-subset content (curves, arcs); the message names
// the offending command.
struct UnsupportedSvgFeature : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SvgDocument {
    std::vector<Polygon> polygons;                       // SVG user units, y-down
    std::vector<std::optional<PieceType>> piece_hints;   // from class="<type>" when present
    double min_x = 0.0, min_y = 0.0;                     // viewBox origin
    double width = 0.0, height = 0.0;
};

// Straight-edge subset: polygon, closed polyline, and path with M/L/H/V/Z
// (absolute or relative). Anything curved errors loudly.
SvgDocument parse_svg(std::string_view text);

// Parses, maps coordinates into [0,10]^2 (aspect preserved, letterboxed,
// centered) and fits every polygon to a canonical template.
SceneAnnotation import_svg(std::string_view text, const std::string& scene_id);

// Full-precision writer used for roundtrip checks; records each piece's type
// as a class attribute.
std::string export_svg(const SceneAnnotation& a);

} // namespace tangram
