#include "tangram/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace tangram {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Polygon centered_ccw(std::initializer_list<Vec2> raw) {
    Polygon poly(raw);
    if (signed_area(poly) < 0.0) {
        std::reverse(poly.begin(), poly.end());
    }
    const Vec2 c = polygon_centroid(poly);
    for (auto& v : poly) {
        v = v - c;
    }
    return poly;
}

PieceTemplate make_template(PieceType type, std::initializer_list<Vec2> raw) {
    PieceTemplate t;
    t.piece_type = type;
    t.vertices = centered_ccw(raw);
    t.area = polygon_area(t.vertices);
    return t;
}

// Classic decomposition of the square (0,0)-(4,4) into the seven pieces.
const std::array<PieceTemplate, 7>& all_templates() {
    static const std::array<PieceTemplate, 7> kTemplates = {
        make_template(PieceType::LargeTriangle1, {{0, 0}, {4, 0}, {2, 2}}),
        make_template(PieceType::LargeTriangle2, {{0, 0}, {4, 0}, {2, 2}}),
        make_template(PieceType::MediumTriangle, {{4, 4}, {4, 2}, {2, 4}}),
        make_template(PieceType::SmallTriangle1, {{4, 0}, {4, 2}, {3, 1}}),
        make_template(PieceType::SmallTriangle2, {{4, 0}, {4, 2}, {3, 1}}),
        make_template(PieceType::Square, {{2, 2}, {3, 1}, {4, 2}, {3, 3}}),
        make_template(PieceType::Parallelogram, {{0, 4}, {1, 3}, {3, 3}, {2, 4}}),
    };
    return kTemplates;
}

} // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::string_view to_string(PieceType t) {
    switch (t) {
        case PieceType::LargeTriangle1: return "large-triangle-1";
        case PieceType::LargeTriangle2: return "large-triangle-2";
        case PieceType::MediumTriangle: return "medium-triangle";
        case PieceType::SmallTriangle1: return "small-triangle-1";
        case PieceType::SmallTriangle2: return "small-triangle-2";
        case PieceType::Square: return "square";
        case PieceType::Parallelogram: return "parallelogram";
    }
    return "unknown";
}

std::optional<PieceType> piece_type_from_string(std::string_view s) {
    for (PieceType t : kAllPieceTypes) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

bool is_chiral(PieceType t) { return t == PieceType::Parallelogram; }

double symmetry_period_deg(PieceType t) {
    switch (t) {
        case PieceType::Square: return 90.0;
        case PieceType::Parallelogram: return 180.0;
        default: return 360.0;
    }
}

const PieceTemplate& template_of(PieceType t) {
    return all_templates()[static_cast<size_t>(t)];
}

double wrap_angle_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    if (w >= 360.0) { // fmod can land exactly on 360 after the += above
        w = 0.0;
    }
    return w;
}

Polygon realize(const Placement& p) {
    if (!(p.size > 0.0)) {
        throw std::invalid_argument("placement size must be positive");
    }
    const PieceTemplate& tpl = template_of(p.piece_type);
    const double rad = p.angle * kPi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);

    Polygon out;
    out.reserve(tpl.vertices.size());
    for (const Vec2& v : tpl.vertices) {
        Vec2 local{p.flip ? -v.x : v.x, v.y};
        local = local * p.size;
        Vec2 world{c * local.x - s * local.y, s * local.x + c * local.y};
        out.push_back(world + p.pos);
    }
    if (p.flip) {
        std::reverse(out.begin(), out.end()); // restore CCW after the mirror
    }
    return out;
}

double signed_area(const Polygon& poly) {
    double acc = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        acc += cross(a, b);
    }
    return 0.5 * acc;
}

double polygon_area(const Polygon& poly) { return std::abs(signed_area(poly)); }

Vec2 polygon_centroid(const Polygon& poly) {
    const size_t n = poly.size();
    double a = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        const double w = cross(p, q);
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if (std::abs(a) < 1e-300) {
        throw std::invalid_argument("degenerate polygon has no centroid");
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

bool is_convex(const Polygon& poly) {
    const size_t n = poly.size();
    if (n < 3) {
        return false;
    }
    int sign = 0;
    for (size_t i = 0; i < n; ++i) {
        const Vec2 e1 = poly[(i + 1) % n] - poly[i];
        const Vec2 e2 = poly[(i + 2) % n] - poly[(i + 1) % n];
        const double z = cross(e1, e2);
        if (z > 1e-12) {
            if (sign < 0) return false;
            sign = 1;
        } else if (z < -1e-12) {
            if (sign > 0) return false;
            sign = -1;
        }
    }
    return true;
}

std::optional<Polygon> convex_intersection(const Polygon& a, const Polygon& b) {
    if (!is_convex(a) || !is_convex(b)) {
        throw std::invalid_argument("convex_intersection requires convex polygons");
    }
    // Clip a by every half-plane of b (Sutherland-Hodgman, boundary inclusive).
    Polygon subject = a;
    if (signed_area(subject) < 0.0) {
        std::reverse(subject.begin(), subject.end());
    }
    Polygon clip = b;
    if (signed_area(clip) < 0.0) {
        std::reverse(clip.begin(), clip.end());
    }

    const size_t m = clip.size();
    for (size_t i = 0; i < m && !subject.empty(); ++i) {
        const Vec2 e0 = clip[i];
        const Vec2 e1 = clip[(i + 1) % m];
        const Vec2 edge = e1 - e0;

        Polygon next;
        next.reserve(subject.size() + 2);
        const size_t n = subject.size();
        for (size_t j = 0; j < n; ++j) {
            const Vec2 cur = subject[j];
            const Vec2 prev = subject[(j + n - 1) % n];
            const double dc = cross(edge, cur - e0);
            const double dp = cross(edge, prev - e0);
            const bool cur_in = dc >= 0.0;
            const bool prev_in = dp >= 0.0;
            if (cur_in) {
                if (!prev_in) {
                    const double t = dp / (dp - dc);
                    next.push_back(prev + (cur - prev) * t);
                }
                next.push_back(cur);
            } else if (prev_in) {
                const double t = dp / (dp - dc);
                next.push_back(prev + (cur - prev) * t);
            }
        }
        subject = std::move(next);
    }

    if (subject.size() < 3 || polygon_area(subject) <= 0.0) {
        return std::nullopt;
    }
    return subject;
}

double exact_iou(const Polygon& a, const Polygon& b) {
    const auto inter = convex_intersection(a, b);
    if (!inter) {
        return 0.0;
    }
    const double ia = polygon_area(*inter);
    const double ua = polygon_area(a) + polygon_area(b) - ia;
    if (ua <= 0.0) {
        return 0.0;
    }
    return ia / ua;
}

double overlap_area(const Placement& a, const Placement& b) {
    const auto inter = convex_intersection(realize(a), realize(b));
    return inter ? polygon_area(*inter) : 0.0;
}

} // namespace tangram
