#include "tangram/svg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace tangram {

namespace {

struct Tag {
    std::string name;
    std::map<std::string, std::string> attrs;
    bool closing = false;      // </name>
    bool self_closing = false; // <name ... />
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

void skip_ws(std::string_view text, size_t& i) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
}

// Parses the tag starting at text[i] == '<'. Advances i past the closing '>'.
Tag parse_tag(std::string_view text, size_t& i) {
    Tag tag;
    ++i; // '<'
    if (i < text.size() && text[i] == '/') {
        tag.closing = true;
        ++i;
    }
    const size_t name_start = i;
    while (i < text.size() && is_name_char(text[i])) {
        ++i;
    }
    tag.name = std::string(text.substr(name_start, i - name_start));
    if (tag.name.empty()) {
        throw SvgParseError("malformed XML: empty tag name");
    }
    while (true) {
        skip_ws(text, i);
        if (i >= text.size()) {
            throw SvgParseError("malformed XML: unterminated tag <" + tag.name + ">");
        }
        if (text[i] == '>') {
            ++i;
            return tag;
        }
        if (text[i] == '/') {
            ++i;
            if (i >= text.size() || text[i] != '>') {
                throw SvgParseError("malformed XML: stray '/' in tag <" + tag.name + ">");
            }
            ++i;
            tag.self_closing = true;
            return tag;
        }
        const size_t attr_start = i;
        while (i < text.size() && is_name_char(text[i])) {
            ++i;
        }
        std::string attr(text.substr(attr_start, i - attr_start));
        if (attr.empty()) {
            throw SvgParseError("malformed XML: bad attribute in tag <" + tag.name + ">");
        }
        skip_ws(text, i);
        if (i >= text.size() || text[i] != '=') {
            tag.attrs[attr] = ""; // attribute minimization; tolerated
            continue;
        }
        ++i;
        skip_ws(text, i);
        if (i >= text.size() || (text[i] != '"' && text[i] != '\'')) {
            throw SvgParseError("malformed XML: unquoted attribute value for " + attr);
        }
        const char quote = text[i];
        ++i;
        const size_t val_start = i;
        while (i < text.size() && text[i] != quote) {
            ++i;
        }
        if (i >= text.size()) {
            throw SvgParseError("malformed XML: unterminated attribute value for " + attr);
        }
        tag.attrs[attr] = std::string(text.substr(val_start, i - val_start));
        ++i;
    }
}

std::vector<double> parse_number_list(std::string_view s, const std::string& what) {
    std::vector<double> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() &&
               (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) {
            ++i;
        }
        if (i >= s.size()) {
            break;
        }
        const char* begin = s.data() + i;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) {
            throw SvgParseError("invalid number in " + what);
        }
        out.push_back(v);
        i += static_cast<size_t>(end - begin);
    }
    return out;
}

Polygon points_to_polygon(std::string_view points, const std::string& element) {
    const std::vector<double> nums = parse_number_list(points, element + " points");
    if (nums.size() % 2 != 0) {
        throw SvgParseError("odd number of coordinates in " + element + " points");
    }
    Polygon poly;
    poly.reserve(nums.size() / 2);
    for (size_t i = 0; i + 1 < nums.size(); i += 2) {
        poly.push_back({nums[i], nums[i + 1]});
    }
    // Drop a duplicated closing vertex.
    if (poly.size() > 1 && norm(poly.front() - poly.back()) < 1e-12) {
        poly.pop_back();
    }
    if (poly.size() < 3) {
        throw SvgParseError(element + " has fewer than 3 vertices");
    }
    return poly;
}

// Straight-line subset of the path grammar. Emits one polygon per subpath.
std::vector<Polygon> parse_path_data(std::string_view d) {
    std::vector<Polygon> polys;
    Polygon current;
    Vec2 cursor{0, 0};
    Vec2 subpath_start{0, 0};
    char cmd = 0;
    size_t i = 0;

    auto flush = [&]() {
        if (current.size() > 1 && norm(current.front() - current.back()) < 1e-12) {
            current.pop_back();
        }
        if (current.size() >= 3) {
            polys.push_back(current);
        }
        current.clear();
    };
    auto read_number = [&]() -> double {
        while (i < d.size() &&
               (std::isspace(static_cast<unsigned char>(d[i])) || d[i] == ',')) {
            ++i;
        }
        const char* begin = d.data() + i;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) {
            throw SvgParseError("expected a number in path data");
        }
        i += static_cast<size_t>(end - begin);
        return v;
    };
    auto at_number = [&]() -> bool {
        size_t j = i;
        while (j < d.size() &&
               (std::isspace(static_cast<unsigned char>(d[j])) || d[j] == ',')) {
            ++j;
        }
        if (j >= d.size()) {
            return false;
        }
        const char c = d[j];
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    };

    while (true) {
        while (i < d.size() &&
               (std::isspace(static_cast<unsigned char>(d[i])) || d[i] == ',')) {
            ++i;
        }
        if (i >= d.size()) {
            break;
        }
        const char c = d[i];
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cmd = c;
            ++i;
            const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
            if (upper != 'M' && upper != 'L' && upper != 'H' && upper != 'V' && upper != 'Z') {
                throw UnsupportedSvgFeature(std::string("unsupported path command '") + cmd +
                                            "' (only M/L/H/V/Z are accepted)");
            }
            if (upper == 'Z') {
                flush();
                cursor = subpath_start;
                continue;
            }
        } else if (cmd == 0) {
            throw SvgParseError("path data does not start with a command");
        }

        const bool relative = std::islower(static_cast<unsigned char>(cmd));
        const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
        if (upper == 'M') {
            const double x = read_number();
            const double y = read_number();
            flush(); // an M begins a new subpath
            cursor = relative ? cursor + Vec2{x, y} : Vec2{x, y};
            subpath_start = cursor;
            current.push_back(cursor);
            // Trailing pairs after a moveto are implicit linetos.
            cmd = relative ? 'l' : 'L';
        } else if (upper == 'L') {
            const double x = read_number();
            const double y = read_number();
            cursor = relative ? cursor + Vec2{x, y} : Vec2{x, y};
            current.push_back(cursor);
        } else if (upper == 'H') {
            const double x = read_number();
            cursor.x = relative ? cursor.x + x : x;
            current.push_back(cursor);
        } else if (upper == 'V') {
            const double y = read_number();
            cursor.y = relative ? cursor.y + y : y;
            current.push_back(cursor);
        }
        (void)at_number;
    }
    flush();
    return polys;
}

std::optional<PieceType> hint_from_class(const std::map<std::string, std::string>& attrs) {
    const auto it = attrs.find("class");
    if (it == attrs.end()) {
        return std::nullopt;
    }
    // A class list may carry other tokens; take the first that names a piece.
    size_t i = 0;
    const std::string& s = it->second;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (const auto t = piece_type_from_string(std::string_view(s).substr(i, j - i))) {
            return t;
        }
        i = j;
    }
    return std::nullopt;
}

} // namespace

SvgDocument parse_svg(std::string_view text) {
    SvgDocument doc;
    bool saw_svg = false;
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            const size_t end = text.find("-->", i + 4);
            if (end == std::string_view::npos) {
                throw SvgParseError("malformed XML: unterminated comment");
            }
            i = end + 3;
            continue;
        }
        if (text.compare(i, 2, "<?") == 0) {
            const size_t end = text.find("?>", i + 2);
            if (end == std::string_view::npos) {
                throw SvgParseError("malformed XML: unterminated processing instruction");
            }
            i = end + 2;
            continue;
        }
        if (text.compare(i, 2, "<!") == 0) {
            const size_t end = text.find('>', i + 2);
            if (end == std::string_view::npos) {
                throw SvgParseError("malformed XML: unterminated declaration");
            }
            i = end + 1;
            continue;
        }
        Tag tag = parse_tag(text, i);
        if (tag.closing) {
            continue;
        }
        if (tag.name == "svg") {
            saw_svg = true;
            if (const auto it = tag.attrs.find("viewBox"); it != tag.attrs.end()) {
                const auto v = parse_number_list(it->second, "viewBox");
                if (v.size() != 4) {
                    throw SvgParseError("viewBox needs 4 numbers");
                }
                doc.min_x = v[0];
                doc.min_y = v[1];
                doc.width = v[2];
                doc.height = v[3];
            } else {
                if (const auto w = tag.attrs.find("width"); w != tag.attrs.end()) {
                    doc.width = parse_number_list(w->second, "width").at(0);
                }
                if (const auto h = tag.attrs.find("height"); h != tag.attrs.end()) {
                    doc.height = parse_number_list(h->second, "height").at(0);
                }
            }
        } else if (tag.name == "polygon" || tag.name == "polyline") {
            const auto it = tag.attrs.find("points");
            if (it == tag.attrs.end()) {
                throw SvgParseError(tag.name + " element is missing its points attribute");
            }
            doc.polygons.push_back(points_to_polygon(it->second, tag.name));
            doc.piece_hints.push_back(hint_from_class(tag.attrs));
        } else if (tag.name == "path") {
            const auto it = tag.attrs.find("d");
            if (it == tag.attrs.end()) {
                throw SvgParseError("path element is missing its d attribute");
            }
            for (Polygon& poly : parse_path_data(it->second)) {
                doc.polygons.push_back(std::move(poly));
                doc.piece_hints.push_back(hint_from_class(tag.attrs));
            }
        }
        // Other elements (g, title, rect used as background, ...) are ignored.
    }
    if (!saw_svg) {
        throw SvgParseError("no <svg> root element found");
    }
    if (doc.width <= 0.0 || doc.height <= 0.0) {
        // Fall back to the polygon extent when the root gives no dimensions.
        double max_x = 0.0;
        double max_y = 0.0;
        for (const Polygon& poly : doc.polygons) {
            for (const Vec2& v : poly) {
                max_x = std::max(max_x, v.x);
                max_y = std::max(max_y, v.y);
            }
        }
        doc.width = max_x > 0.0 ? max_x : kCanvasSide;
        doc.height = max_y > 0.0 ? max_y : kCanvasSide;
        doc.min_x = 0.0;
        doc.min_y = 0.0;
    }
    return doc;
}

SceneAnnotation import_svg(std::string_view text, const std::string& scene_id) {
    const SvgDocument doc = parse_svg(text);
    if (doc.polygons.empty()) {
        throw SvgParseError("SVG contains no polygons to import");
    }
    if (doc.polygons.size() > 2) {
        throw SvgParseError("SVG has " + std::to_string(doc.polygons.size()) +
                            " polygons; only 1- and 2-piece scenes are supported");
    }

    // Aspect-preserving map of the viewBox onto [0,10]^2, letterboxed centered.
    const double scale = kCanvasSide / std::max(doc.width, doc.height);
    const Vec2 offset{(kCanvasSide - doc.width * scale) / 2.0 - doc.min_x * scale,
                      (kCanvasSide - doc.height * scale) / 2.0 - doc.min_y * scale};

    SceneAnnotation a;
    a.scene_id = scene_id;
    a.split = doc.polygons.size() == 1 ? Split::Single : Split::TwoPiece;
    a.source = SceneSource::SvgImport;
    for (size_t i = 0; i < doc.polygons.size(); ++i) {
        Polygon mapped = doc.polygons[i];
        for (Vec2& v : mapped) {
            v = v * scale + offset;
        }
        try {
            a.pieces.push_back(fit_template(mapped, doc.piece_hints[i]).placement);
        } catch (const UnfittablePolygon& e) {
            throw UnfittablePolygon("polygon " + std::to_string(i) + ": " + e.what());
        }
    }
    return a;
}

std::string export_svg(const SceneAnnotation& a) {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 10 10\">\n";
    for (const Placement& p : a.pieces) {
        const Polygon poly = realize(p);
        out += "  <polygon class=\"";
        out += to_string(p.piece_type);
        out += "\" points=\"";
        char buf[64];
        for (size_t i = 0; i < poly.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", poly[i].x, poly[i].y);
            if (i) {
                out += ' ';
            }
            out += buf;
        }
        out += "\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace tangram
