#pragma once

#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace crowdtt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Euclidean length, written out as sqrt(dx^2 + dy^2) everywhere so that
// every distance in the project rounds identically.
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return distance(a, b); }
    Vec2 midpoint() const { return (a + b) * 0.5; }
};

Vec2 closest_point(const Segment& s, Vec2 p);
double distance_to_segment(const Segment& s, Vec2 p);

// Simple polygon, vertices in either winding order, implicitly closed.
struct Polygon {
    std::vector<Vec2> vertices;

    bool contains(Vec2 p) const;
    std::vector<Segment> edges() const;
};

// An ingress/egress opening on the arena boundary.
struct PortalRegion {
    int id = 0;
    Segment span;
};

// Pseudo-portal used for track endpoints that are not near any real portal.
inline constexpr int kInteriorPortal = 0;

// Axis-aligned rectangular arena [0,width] x [0,height] with numbered
// portals on its boundary and optional interior obstacles.
struct ArenaGeometry {
    double width = 0.0;
    double height = 0.0;
    std::vector<PortalRegion> portals;
    std::vector<Polygon> obstacles;

    // Throws InvalidArgument if the geometry breaks its invariants.
    void validate() const;

    bool in_bounds(Vec2 p, double tolerance = 1e-9) const;
    const PortalRegion* find_portal(int id) const;
    bool inside_obstacle(Vec2 p) const;

    // Perimeter pieces between portal openings, as open polylines.
    std::vector<std::vector<Vec2>> boundary_walls() const;

    // Nearest portal to p and its distance; id kInteriorPortal when there
    // are no portals.
    std::pair<int, double> nearest_portal(Vec2 p) const;
};

// The 15.8 m x 11.86 m forum with eleven 2 m openings. Opening positions
// are a plausible reading of the floor plan.
ArenaGeometry forum_arena();

// Key-value arena file:
//   width = 15.8
//   height = 11.86
//   portal.<id> = x1,y1,x2,y2
//   obstacle.<n> = x,y;x,y;x,y
ArenaGeometry parse_arena(std::istream& in);
ArenaGeometry load_arena(const std::string& path);
void write_arena(std::ostream& out, const ArenaGeometry& arena);

}  // namespace crowdtt
