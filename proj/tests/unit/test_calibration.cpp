#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "crowdtt/calibration.hpp"
#include "crowdtt/error.hpp"
#include "generators.hpp"

using namespace crowdtt;

namespace {

// Walker from the middle of portal `from` to the middle of portal `to`.
Track portal_walk(const std::string& id, int from, int to, double t0 = 0.0) {
    const auto arena = forum_arena();
    const Vec2 a = arena.find_portal(from)->span.midpoint();
    const Vec2 b = arena.find_portal(to)->span.midpoint();
    const double len = distance(a, b);
    const std::size_t samples = static_cast<std::size_t>(len / 1.2 * 9.0) + 2;
    Track t = gen::straight_track(id, a, (b - a) / ((samples - 1) / 9.0), t0, samples, 9.0);
    t.points.back().x = b.x;
    t.points.back().y = b.y;
    return t;
}

}  // namespace

TEST(RouteChoices, SingleTrack) {
    const auto clip = gen::clip_of({portal_walk("a", 1, 5)}, 9.0, 60.0);
    const auto r = extract_route_choices(clip, forum_arena());
    ASSERT_EQ(r.probabilities.size(), 1u);
    EXPECT_EQ(r.probabilities.at({1, 5}), 1.0);
}

TEST(RouteChoices, SymmetricPair) {
    const auto clip = gen::clip_of({portal_walk("a", 1, 5), portal_walk("b", 5, 1)}, 9.0, 60.0);
    const auto r = extract_route_choices(clip, forum_arena());
    EXPECT_EQ(r.probabilities.at({1, 5}), 0.5);
    EXPECT_EQ(r.probabilities.at({5, 1}), 0.5);
}

TEST(RouteChoices, HandCountedFixture) {
    // 10 tracks over 3 portal pairs: 5 x (2,7), 3 x (4,10), 2 x (9,3).
    std::vector<Track> tracks;
    for (int i = 0; i < 5; ++i) tracks.push_back(portal_walk("a" + std::to_string(i), 2, 7));
    for (int i = 0; i < 3; ++i) tracks.push_back(portal_walk("b" + std::to_string(i), 4, 10));
    for (int i = 0; i < 2; ++i) tracks.push_back(portal_walk("c" + std::to_string(i), 9, 3));
    const auto r = extract_route_choices(gen::clip_of(tracks, 9.0, 60.0), forum_arena());
    EXPECT_DOUBLE_EQ(r.probabilities.at({2, 7}), 0.5);
    EXPECT_DOUBLE_EQ(r.probabilities.at({4, 10}), 0.3);
    EXPECT_DOUBLE_EQ(r.probabilities.at({9, 3}), 0.2);
    EXPECT_NEAR(r.total(), 1.0, 1e-12);
    const auto from4 = r.destinations_from(4);
    ASSERT_EQ(from4.size(), 1u);
    EXPECT_EQ(from4[0].first, 10);
    EXPECT_DOUBLE_EQ(from4[0].second, 1.0);
}

TEST(RouteChoices, InteriorEndpointsAreReported) {
    gen::Source src(2);
    Track t = gen::straight_track("mid", {7, 5}, {0.5, 0}, 0.0, 10, 9.0);
    PortalAssignmentReport report;
    const auto r = extract_route_choices(gen::clip_of({t}, 9.0, 60.0), forum_arena(), &report);
    ASSERT_EQ(report.interior_tracks.size(), 1u);
    EXPECT_EQ(r.probabilities.count({kInteriorPortal, kInteriorPortal}), 1u);
}

TEST(RouteChoicesProperty, SumsToOne) {
    gen::Source src(31);
    for (int c = 0; c < 200; ++c) {
        std::vector<Track> tracks;
        const int n = src.integer(1, 40);
        for (int k = 0; k < n; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 20));
        const auto r = extract_route_choices(gen::clip_of(tracks, 9.0, 60.0), forum_arena());
        EXPECT_NEAR(r.total(), 1.0, 1e-9);
    }
}

TEST(EntryTimes, ValuesRelativeToClipStart) {
    auto clip = gen::clip_of({portal_walk("a", 1, 5, 100.0), portal_walk("b", 2, 6, 110.0),
                              portal_walk("c", 3, 7, 159.0)},
                             9.0, 60.0);
    clip.start = 100.0;
    const auto e = extract_entry_times(clip, forum_arena());
    ASSERT_EQ(e.observations.size(), 3u);
    EXPECT_NEAR(e.observations[0].time, 0.0, 1e-12);
    EXPECT_NEAR(e.observations[1].time, 10.0, 1e-12);
    EXPECT_NEAR(e.observations[2].time, 59.0, 1e-12);
    EXPECT_EQ(e.observations[0].portal, 1);
    EXPECT_EQ(e.observations[2].portal, 3);
}

TEST(EntryTimes, PartialTrackUsesFirstVisibleSample) {
    // Already inside the arena when the clip starts: interior origin, t = first sample.
    Track t = gen::straight_track("p", {6, 6}, {1, 0}, 3.0, 20, 9.0);
    const auto e = extract_entry_times(gen::clip_of({t}, 9.0, 60.0), forum_arena());
    ASSERT_EQ(e.observations.size(), 1u);
    EXPECT_DOUBLE_EQ(e.observations[0].time, 3.0);
    EXPECT_EQ(e.observations[0].portal, kInteriorPortal);
}

TEST(EntryTimesProperty, CountMatchesTracks) {
    gen::Source src(8);
    for (int c = 0; c < 100; ++c) {
        std::vector<Track> tracks;
        const int n = src.integer(0, 30);
        for (int k = 0; k < n; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 10));
        const auto e = extract_entry_times(gen::clip_of(tracks, 9.0, 60.0), forum_arena());
        EXPECT_EQ(e.observations.size(), tracks.size());
        EXPECT_TRUE(std::is_sorted(e.observations.begin(), e.observations.end(),
                                   [](const auto& a, const auto& b) { return a.time < b.time; }));
    }
}

TEST(SpeedStats, SingleTrack) {
    const auto s = speed_stats({gen::clip_of({gen::straight_track("a", {1, 1}, {1, 0}, 0, 10, 9.0)}, 9.0, 60)});
    EXPECT_NEAR(s.mean, 1.0, 1e-12);
}

TEST(SpeedStats, TwoSpeeds) {
    const auto s = speed_stats({gen::clip_of({gen::straight_track("a", {1, 1}, {1, 0}, 0, 10, 9.0),
                                              gen::straight_track("b", {1, 3}, {0, 2}, 0, 10, 9.0)},
                                             9.0, 60)});
    EXPECT_NEAR(s.mean, 1.5, 1e-12);
    ASSERT_EQ(s.track_means.size(), 2u);
    EXPECT_EQ(s.excluded, 0u);
}

TEST(SpeedStats, ShortTracksExcluded) {
    Track one;
    one.id = "x";
    one.points = {{0, 1, 1}};
    const auto s = speed_stats({gen::clip_of({one}, 9.0, 60)});
    EXPECT_EQ(s.excluded, 1u);
    EXPECT_EQ(s.mean, 0.0);
}

TEST(SpeedStatsProperty, InvariantUnderReorderAndTranslation) {
    gen::Source src(41);
    for (int c = 0; c < 100; ++c) {
        std::vector<Track> tracks;
        for (int k = 0; k < 12; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 25));
        const double base = speed_stats({gen::clip_of(tracks, 9.0, 60)}).mean;
        auto shuffled = tracks;
        std::shuffle(shuffled.begin(), shuffled.end(), src.engine());
        EXPECT_NEAR(speed_stats({gen::clip_of(shuffled, 9.0, 60)}).mean, base, 1e-12);
        const Vec2 shift{src.uniform(-100, 100), src.uniform(-100, 100)};
        for (auto& t : shuffled)
            for (auto& p : t.points) {
                p.x += shift.x;
                p.y += shift.y;
            }
        EXPECT_NEAR(speed_stats({gen::clip_of(shuffled, 9.0, 60)}).mean, base, 1e-9);
    }
}

TEST(PlaybackScale, Values) {
    EXPECT_EQ(playback_scale(1.4, 1.4).factor, 1.0);
    EXPECT_EQ(playback_scale(0.7, 1.4).factor, 2.0);
    EXPECT_NEAR(playback_scale(1.17).factor, 1.1966, 1e-4);
    EXPECT_THROW(playback_scale(0.0), InvalidArgument);
    EXPECT_THROW(playback_scale(1.0, -1.0), InvalidArgument);
}

TEST(PlaybackScaleProperty, FactorTimesObservedIsReference) {
    gen::Source src(4);
    for (int c = 0; c < 1000; ++c) {
        const double s = src.uniform(0.05, 5.0);
        const double r = src.uniform(0.05, 5.0);
        EXPECT_NEAR(playback_scale(s, r).factor * s, r, 1e-12 * r);
    }
}

TEST(CalibrationFiles, RoutesAndEntriesRoundTrip) {
    RouteChoiceDistribution r;
    r.probabilities[{1, 5}] = 0.25;
    r.probabilities[{2, 7}] = 0.75;
    std::stringstream rs;
    write_routes(rs, r);
    EXPECT_EQ(read_routes(rs).probabilities, r.probabilities);

    EntryTimeDistribution e;
    e.observations = {{0.0, 1}, {1.0 / 3.0, 4}, {59.5, 11}};
    std::stringstream es;
    write_entries(es, e);
    EXPECT_EQ(read_entries(es).observations, e.observations);

    std::istringstream bad("origin,destination,probability\n1,x,0.5\n");
    EXPECT_THROW(read_routes(bad), ParseError);
}
