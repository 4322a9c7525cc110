#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace tangram {

// World canvas is the square [0,10]^2; all geometry lives in canvas units.
inline constexpr double kCanvasSide = 10.0;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
inline Vec2 operator*(double s, Vec2 a) { return a * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

// Simple polygon, counter-clockwise vertex order.
using Polygon = std::vector<Vec2>;

enum class PieceType {
    LargeTriangle1,
    LargeTriangle2,
    MediumTriangle,
    SmallTriangle1,
    SmallTriangle2,
    Square,
    Parallelogram,
};

inline constexpr std::array<PieceType, 7> kAllPieceTypes = {
    PieceType::LargeTriangle1, PieceType::LargeTriangle2, PieceType::MediumTriangle,
    PieceType::SmallTriangle1, PieceType::SmallTriangle2, PieceType::Square,
    PieceType::Parallelogram,
};

std::string_view to_string(PieceType t);
std::optional<PieceType> piece_type_from_string(std::string_view s);

// Only the parallelogram changes its point set under a mirror flip.
bool is_chiral(PieceType t);

// Rotational symmetry period in degrees: square 90, parallelogram 180, triangles 360.
double symmetry_period_deg(PieceType t);

struct PieceTemplate {
    PieceType piece_type;
    Polygon vertices;  // CCW, polygon centroid at the origin
    double area = 0.0; // canvas units^2 at size 1
};

// Fixed canonical template for a piece type. The two large (resp. small)
// triangles share one template.
const PieceTemplate& template_of(PieceType t);

struct Placement {
    PieceType piece_type = PieceType::MediumTriangle;
    Vec2 pos;            // centroid location in [0,10]^2
    double angle = 0.0;  // degrees, CCW, [0,360)
    double size = 1.0;   // > 0, multiplier on the template
    bool flip = false;   // mirror about the local vertical axis before rotation
};

// pos + R(angle) * M(flip) * size * template vertices, re-oriented CCW.
// Throws std::invalid_argument when size <= 0.
Polygon realize(const Placement& p);

double signed_area(const Polygon& poly);
double polygon_area(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);
bool is_convex(const Polygon& poly);

// Convex-on-convex half-plane clipping. Returns std::nullopt when the
// intersection is empty or degenerate (zero area). Throws
// std::invalid_argument when an input is not convex.
std::optional<Polygon> convex_intersection(const Polygon& a, const Polygon& b);

// area(a n b) / area(a u b) for convex polygons; exactly 1.0 for equal inputs.
double exact_iou(const Polygon& a, const Polygon& b);

// Mutual intersection area of two placed pieces, canvas units^2.
double overlap_area(const Placement& a, const Placement& b);

double wrap_angle_deg(double deg); // into [0,360)

} // namespace tangram
