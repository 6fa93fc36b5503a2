#include "crowdtt/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "crowdtt/error.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt {

Vec2 closest_point(const Segment& s, Vec2 p) {
    const Vec2 ab = s.b - s.a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return s.a;
    const double u = std::clamp(dot(p - s.a, ab) / len2, 0.0, 1.0);
    return s.a + ab * u;
}

double distance_to_segment(const Segment& s, Vec2 p) { return distance(closest_point(s, p), p); }

bool Polygon::contains(Vec2 p) const {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = vertices[i];
        const Vec2 b = vertices[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

std::vector<Segment> Polygon::edges() const {
    std::vector<Segment> out;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) out.push_back({vertices[i], vertices[(i + 1) % n]});
    return out;
}

namespace {

constexpr double kBoundaryTol = 1e-6;

bool on_boundary(const ArenaGeometry& a, Vec2 p) {
    const bool on_x = std::abs(p.x) < kBoundaryTol || std::abs(p.x - a.width) < kBoundaryTol;
    const bool on_y = std::abs(p.y) < kBoundaryTol || std::abs(p.y - a.height) < kBoundaryTol;
    const bool inside_x = p.x > -kBoundaryTol && p.x < a.width + kBoundaryTol;
    const bool inside_y = p.y > -kBoundaryTol && p.y < a.height + kBoundaryTol;
    return (on_x && inside_y) || (on_y && inside_x);
}

// Arc-length position of a boundary point, walking counter-clockwise from
// the origin: bottom edge, right edge, top edge, left edge.
double perimeter_coord(const ArenaGeometry& a, Vec2 p) {
    if (std::abs(p.y) < kBoundaryTol && p.x < a.width - kBoundaryTol) return p.x;
    if (std::abs(p.x - a.width) < kBoundaryTol && p.y < a.height - kBoundaryTol) return a.width + p.y;
    if (std::abs(p.y - a.height) < kBoundaryTol && p.x > kBoundaryTol) return a.width + a.height + (a.width - p.x);
    return 2.0 * a.width + a.height + (a.height - p.y);
}

Vec2 perimeter_point(const ArenaGeometry& a, double s) {
    const double w = a.width;
    const double h = a.height;
    if (s <= w) return {s, 0.0};
    if (s <= w + h) return {w, s - w};
    if (s <= 2 * w + h) return {w - (s - w - h), h};
    return {0.0, h - (s - 2 * w - h)};
}

}  // namespace

void ArenaGeometry::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("arena width and height must be positive");
    for (const auto& p : portals) {
        if (p.id <= 0) throw InvalidArgument("portal ids must be positive");
        if (!on_boundary(*this, p.span.a) || !on_boundary(*this, p.span.b))
            throw InvalidArgument("portal " + std::to_string(p.id) + " does not lie on the arena boundary");
        if (std::count_if(portals.begin(), portals.end(), [&](const PortalRegion& q) { return q.id == p.id; }) != 1)
            throw InvalidArgument("duplicate portal id " + std::to_string(p.id));
    }
    for (const auto& o : obstacles)
        if (o.vertices.size() < 3) throw InvalidArgument("obstacle polygons need at least 3 vertices");
}

bool ArenaGeometry::in_bounds(Vec2 p, double tolerance) const {
    return p.x >= -tolerance && p.x <= width + tolerance && p.y >= -tolerance && p.y <= height + tolerance;
}

const PortalRegion* ArenaGeometry::find_portal(int id) const {
    for (const auto& p : portals)
        if (p.id == id) return &p;
    return nullptr;
}

bool ArenaGeometry::inside_obstacle(Vec2 p) const {
    return std::any_of(obstacles.begin(), obstacles.end(), [&](const Polygon& o) { return o.contains(p); });
}

std::vector<std::vector<Vec2>> ArenaGeometry::boundary_walls() const {
    const double perimeter = 2.0 * (width + height);
    std::vector<std::pair<double, double>> gaps;
    for (const auto& p : portals) {
        double s0 = perimeter_coord(*this, p.span.a);
        double s1 = perimeter_coord(*this, p.span.b);
        if (s0 > s1) std::swap(s0, s1);
        gaps.emplace_back(s0, s1);
    }
    std::sort(gaps.begin(), gaps.end());

    const double corners[] = {0.0, width, width + height, 2 * width + height, perimeter};
    auto piece = [&](double from, double to) {
        std::vector<Vec2> line{perimeter_point(*this, from)};
        for (double c : corners)
            if (c > from && c < to) line.push_back(perimeter_point(*this, c));
        line.push_back(perimeter_point(*this, to));
        return line;
    };

    std::vector<std::vector<Vec2>> walls;
    if (gaps.empty()) {
        walls.push_back(piece(0.0, perimeter));
        return walls;
    }
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
        if (gaps[i + 1].first > gaps[i].second) walls.push_back(piece(gaps[i].second, gaps[i + 1].first));
    // Wrap-around piece from the last opening back to the first.
    auto wrap = piece(gaps.back().second, perimeter);
    if (gaps.front().first > 0.0) {
        auto head = piece(0.0, gaps.front().first);
        wrap.insert(wrap.end(), head.begin() + 1, head.end());
    }
    if (wrap.size() >= 2) walls.push_back(std::move(wrap));
    return walls;
}

std::pair<int, double> ArenaGeometry::nearest_portal(Vec2 p) const {
    int best = kInteriorPortal;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& portal : portals) {
        const double d = distance_to_segment(portal.span, p);
        if (d < best_d) {
            best_d = d;
            best = portal.id;
        }
    }
    return {best, best_d};
}

ArenaGeometry forum_arena() {
    ArenaGeometry a;
    a.width = 15.8;
    a.height = 11.86;
    const double w = a.width;
    const double h = a.height;
    a.portals = {
        {1, {{1.0, 0.0}, {3.0, 0.0}}},
        {2, {{6.9, 0.0}, {8.9, 0.0}}},
        {3, {{12.8, 0.0}, {14.8, 0.0}}},
        {4, {{w, 2.0}, {w, 4.0}}},
        {5, {{w, 7.5}, {w, 9.5}}},
        {6, {{14.8, h}, {12.8, h}}},
        {7, {{10.0, h}, {8.0, h}}},
        {8, {{6.0, h}, {4.0, h}}},
        {9, {{2.8, h}, {0.8, h}}},
        {10, {{0.0, 9.5}, {0.0, 7.5}}},
        {11, {{0.0, 4.0}, {0.0, 2.0}}},
    };
    return a;
}

namespace {

Vec2 parse_point(std::string_view s, std::size_t line) {
    const auto parts = text::split(s, ',');
    Vec2 v;
    if (parts.size() != 2 || !text::parse_double(parts[0], v.x) || !text::parse_double(parts[1], v.y))
        throw ParseError(line, "bad point `" + std::string(s) + "`");
    return v;
}

}  // namespace

ArenaGeometry parse_arena(std::istream& in) {
    const auto kv = text::KeyValue::parse(in);
    ArenaGeometry a;
    a.width = kv.get_double("width");
    a.height = kv.get_double("height");
    for (const auto& [key, value] : kv.with_prefix("portal.")) {
        long long id = 0;
        if (!text::parse_int(std::string_view(key).substr(7), id)) throw InvalidArgument("bad portal key `" + key + "`");
        const auto parts = text::split(value, ',');
        Segment s;
        if (parts.size() != 4 || !text::parse_double(parts[0], s.a.x) || !text::parse_double(parts[1], s.a.y) ||
            !text::parse_double(parts[2], s.b.x) || !text::parse_double(parts[3], s.b.y))
            throw InvalidArgument("bad portal value for `" + key + "`");
        a.portals.push_back({static_cast<int>(id), s});
    }
    std::sort(a.portals.begin(), a.portals.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
    for (const auto& [key, value] : kv.with_prefix("obstacle.")) {
        Polygon poly;
        for (auto pt : text::split(value, ';')) poly.vertices.push_back(parse_point(pt, 0));
        a.obstacles.push_back(std::move(poly));
    }
    a.validate();
    return a;
}

ArenaGeometry load_arena(const std::string& path) {
    if (path == "forum") return forum_arena();
    std::ifstream in(path);
    if (!in) throw Error("cannot open arena file " + path);
    return parse_arena(in);
}

void write_arena(std::ostream& out, const ArenaGeometry& arena) {
    using text::format_double;
    out << "width = " << format_double(arena.width) << '\n';
    out << "height = " << format_double(arena.height) << '\n';
    for (const auto& p : arena.portals)
        out << "portal." << p.id << " = " << format_double(p.span.a.x) << ',' << format_double(p.span.a.y) << ','
            << format_double(p.span.b.x) << ',' << format_double(p.span.b.y) << '\n';
    for (std::size_t i = 0; i < arena.obstacles.size(); ++i) {
        out << "obstacle." << i + 1 << " = ";
        const auto& v = arena.obstacles[i].vertices;
        for (std::size_t j = 0; j < v.size(); ++j)
            out << (j ? ";" : "") << format_double(v[j].x) << ',' << format_double(v[j].y);
        out << '\n';
    }
}

}  // namespace crowdtt
