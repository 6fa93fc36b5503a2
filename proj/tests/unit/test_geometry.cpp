#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "crowdtt/error.hpp"
#include "crowdtt/geometry.hpp"
#include "generators.hpp"

using namespace crowdtt;

TEST(Geometry, ClosestPointClampsToSegmentEnds) {
    const Segment s{{0, 0}, {4, 0}};
    EXPECT_EQ(closest_point(s, {2, 3}), (Vec2{2, 0}));
    EXPECT_EQ(closest_point(s, {-1, 1}), (Vec2{0, 0}));
    EXPECT_EQ(closest_point(s, {9, -2}), (Vec2{4, 0}));
    EXPECT_DOUBLE_EQ(distance_to_segment(s, {7, 4}), 5.0);
}

TEST(Geometry, DegenerateSegmentIsAPoint) {
    const Segment s{{1, 1}, {1, 1}};
    EXPECT_EQ(closest_point(s, {4, 5}), (Vec2{1, 1}));
    EXPECT_DOUBLE_EQ(distance_to_segment(s, {4, 5}), 5.0);
}

TEST(Geometry, PolygonContainsEitherWinding) {
    Polygon square{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
    Polygon reversed{{{0, 2}, {2, 2}, {2, 0}, {0, 0}}};
    for (const auto* p : {&square, &reversed}) {
        EXPECT_TRUE(p->contains({1, 1}));
        EXPECT_FALSE(p->contains({3, 1}));
        EXPECT_FALSE(p->contains({-0.5, 1}));
    }
    EXPECT_EQ(square.edges().size(), 4u);
}

TEST(Geometry, ForumArenaIsValidWithElevenOpenings) {
    const auto a = forum_arena();
    EXPECT_NO_THROW(a.validate());
    EXPECT_DOUBLE_EQ(a.width, 15.8);
    EXPECT_DOUBLE_EQ(a.height, 11.86);
    ASSERT_EQ(a.portals.size(), 11u);
    for (const auto& p : a.portals) EXPECT_NEAR(p.span.length(), 2.0, 1e-12) << "portal " << p.id;
}

TEST(Geometry, ValidateRejectsBrokenArenas) {
    auto a = forum_arena();
    a.portals.push_back({3, {{5, 0}, {6, 0}}});
    EXPECT_THROW(a.validate(), InvalidArgument);

    a = forum_arena();
    a.portals.push_back({20, {{5, 5}, {6, 5}}});
    EXPECT_THROW(a.validate(), InvalidArgument);

    a = forum_arena();
    a.width = 0;
    EXPECT_THROW(a.validate(), InvalidArgument);

    a = forum_arena();
    a.obstacles.push_back(Polygon{{{1, 1}, {2, 2}}});
    EXPECT_THROW(a.validate(), InvalidArgument);
}

TEST(Geometry, NearestPortal) {
    const auto a = forum_arena();
    const auto [id, d] = a.nearest_portal({2.0, 0.5});
    EXPECT_EQ(id, 1);
    EXPECT_DOUBLE_EQ(d, 0.5);
    ArenaGeometry empty;
    EXPECT_EQ(empty.nearest_portal({1, 1}).first, kInteriorPortal);
}

TEST(Geometry, BoundaryWallsLeaveOpeningsUncovered) {
    const auto a = forum_arena();
    const auto walls = a.boundary_walls();
    EXPECT_EQ(walls.size(), a.portals.size());
    // Total wall length plus total opening width equals the perimeter.
    double wall = 0.0;
    for (const auto& line : walls)
        for (std::size_t i = 0; i + 1 < line.size(); ++i) wall += distance(line[i], line[i + 1]);
    EXPECT_NEAR(wall + 2.0 * 11, 2.0 * (a.width + a.height), 1e-9);
    // No wall segment passes through an opening's midpoint.
    for (const auto& p : a.portals)
        for (const auto& line : walls)
            for (std::size_t i = 0; i + 1 < line.size(); ++i)
                EXPECT_GT(distance_to_segment({line[i], line[i + 1]}, p.span.midpoint()), 0.5);
}

TEST(Geometry, NoOpeningsMeansOneClosedWall) {
    ArenaGeometry a;
    a.width = 3;
    a.height = 2;
    const auto walls = a.boundary_walls();
    ASSERT_EQ(walls.size(), 1u);
    EXPECT_EQ(walls[0].front(), walls[0].back());
}

TEST(Geometry, ArenaFileRoundTrip) {
    auto a = forum_arena();
    a.obstacles.push_back(Polygon{{{5, 5}, {6, 5}, {6, 6}}});
    std::stringstream ss;
    write_arena(ss, a);
    const auto b = parse_arena(ss);
    EXPECT_EQ(b.width, a.width);
    EXPECT_EQ(b.height, a.height);
    ASSERT_EQ(b.portals.size(), a.portals.size());
    for (std::size_t i = 0; i < a.portals.size(); ++i) {
        EXPECT_EQ(b.portals[i].id, a.portals[i].id);
        EXPECT_EQ(b.portals[i].span.a, a.portals[i].span.a);
        EXPECT_EQ(b.portals[i].span.b, a.portals[i].span.b);
    }
    ASSERT_EQ(b.obstacles.size(), 1u);
    EXPECT_EQ(b.obstacles[0].vertices, a.obstacles[0].vertices);
}

TEST(Geometry, ArenaFileRejectsBadPortal) {
    std::istringstream in("width = 10\nheight = 5\nportal.x = 0,0,1,0\n");
    EXPECT_THROW(parse_arena(in), Error);
}

TEST(GeometryProperty, DistanceToSegmentNeverExceedsEndpointDistance) {
    gen::Source src(11);
    for (int i = 0; i < 2000; ++i) {
        const Segment s{{src.uniform(-5, 5), src.uniform(-5, 5)}, {src.uniform(-5, 5), src.uniform(-5, 5)}};
        const Vec2 p{src.uniform(-8, 8), src.uniform(-8, 8)};
        const double d = distance_to_segment(s, p);
        EXPECT_LE(d, distance(s.a, p) + 1e-12);
        EXPECT_LE(d, distance(s.b, p) + 1e-12);
        // The foot of the perpendicular is on the segment.
        const Vec2 c = closest_point(s, p);
        EXPECT_NEAR(distance(s.a, c) + distance(c, s.b), s.length(), 1e-9);
    }
}
