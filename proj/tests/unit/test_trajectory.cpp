#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "crowdtt/error.hpp"
#include "crowdtt/trajectory.hpp"
#include "generators.hpp"

using namespace crowdtt;

namespace {

IngestResult ingest(const std::string& text, IngestConfig cfg = {}) {
    std::istringstream in(text);
    return ingest_tracks(in, cfg);
}

}  // namespace

// --- ingest ----------------------------------------------------------------

TEST(Ingest, ScalesPixelCoordinates) {
    IngestConfig cfg;
    cfg.scale_x = cfg.scale_y = 0.0247;
    const auto r = ingest("track_id,frame_index,x,y\nt1,0,10,20\nt1,1,30,40\nt1,2,50,60\n", cfg);
    ASSERT_EQ(r.tracks.size(), 1u);
    EXPECT_TRUE(r.rejected.empty());
    const auto& p = r.tracks[0].points;
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[1].x, 30 * 0.0247);
    EXPECT_EQ(p[2].y, 60 * 0.0247);
    EXPECT_EQ(p[2].t, 2.0 / 9.0);
}

TEST(Ingest, EmptyInput) {
    const auto r = ingest("");
    EXPECT_TRUE(r.tracks.empty());
    EXPECT_TRUE(r.rejected.empty());
    EXPECT_TRUE(ingest("track_id,frame_index,x,y\n").tracks.empty());
}

TEST(Ingest, NonMonotonicTrackIsRejected) {
    const auto r = ingest(
        "track_id,frame_index,x,y\n"
        "a,0,1,1\na,1,1.1,1\n"
        "b,0,2,2\nb,1,2.1,2\n"
        "c,5,3,3\nc,4,3.1,3\n"
        "d,0,4,4\nd,2,4.1,4\n"
        "e,7,5,5\ne,8,5.1,5\n");
    EXPECT_EQ(r.tracks.size(), 4u);
    ASSERT_EQ(r.rejected.size(), 1u);
    EXPECT_EQ(r.rejected[0].id, "c");
}

TEST(Ingest, FlipYAndOutOfArena) {
    IngestConfig cfg;
    cfg.flip_y = true;
    const auto r = ingest("track_id,frame_index,x,y\na,0,1,1\na,1,1,2\nb,0,1,1\nb,1,99,1\n", cfg);
    ASSERT_EQ(r.tracks.size(), 1u);
    EXPECT_EQ(r.tracks[0].points[0].y, cfg.arena_height - 1.0);
    ASSERT_EQ(r.rejected.size(), 1u);
    EXPECT_EQ(r.rejected[0].id, "b");
}

TEST(Ingest, MalformedRowsThrowWithLine) {
    try {
        ingest("track_id,frame_index,x,y\na,0,1\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(ingest("id,f,x,y\na,0,1,1\n"), ParseError);
    EXPECT_THROW(ingest("track_id,frame_index,x,y\na,-1,1,1\n"), ParseError);
}

// --- fill_gaps -------------------------------------------------------------

TEST(FillGaps, InsertsLinearMidpoint) {
    Track t;
    t.id = "t";
    t.points = {{0.0, 0.0, 0.0}, {2.0 / 9.0, 2.0, 2.0}};
    const auto r = fill_gaps(t, 5);
    ASSERT_EQ(r.tracks.size(), 1u);
    ASSERT_EQ(r.tracks[0].points.size(), 3u);
    EXPECT_EQ(r.tracks[0].points[1], (TrackPoint{1.0 / 9.0, 1.0, 1.0}));
    EXPECT_EQ(r.interpolated_points, 1u);
}

TEST(FillGaps, NoGapIsIdentity) {
    const auto t = gen::straight_track("s", {1, 1}, {1, 0}, 0.0, 20, 9.0);
    const auto r = fill_gaps(t, 5);
    ASSERT_EQ(r.tracks.size(), 1u);
    EXPECT_EQ(r.tracks[0], t);
}

TEST(FillGaps, LongGapSplits) {
    auto t = gen::straight_track("s", {1, 1}, {0.1, 0}, 0.0, 5, 9.0);
    auto tail = gen::straight_track("s", {4, 1}, {0.1, 0}, 35.0 / 9.0, 5, 9.0);
    t.points.insert(t.points.end(), tail.points.begin(), tail.points.end());
    const auto r = fill_gaps(t, 10);
    ASSERT_EQ(r.tracks.size(), 2u);
    EXPECT_EQ(r.splits, 1u);
    EXPECT_EQ(r.tracks[0].id, "s~1");
    EXPECT_EQ(r.tracks[1].id, "s~2");
}

TEST(FillGapsProperty, Idempotent) {
    gen::Source src(3);
    for (int c = 0; c < 200; ++c) {
        Track t = gen::wander_track(src, "w", 9.0, 60);
        // Punch holes of random length.
        std::vector<TrackPoint> kept;
        for (std::size_t i = 0; i < t.points.size(); ++i)
            if (i == 0 || i + 1 == t.points.size() || !src.coin(0.2)) kept.push_back(t.points[i]);
        t.points = kept;
        const int max_gap = src.integer(0, 4);
        const auto once = fill_gaps(t, max_gap);
        for (const auto& piece : once.tracks) {
            const auto twice = fill_gaps(piece, max_gap);
            ASSERT_EQ(twice.tracks.size(), 1u) << "case " << c;
            EXPECT_EQ(twice.tracks[0], piece);
            EXPECT_EQ(twice.interpolated_points, 0u);
        }
    }
}

// --- resample --------------------------------------------------------------

TEST(Resample, OneToFourStraightSegment) {
    auto clip = gen::clip_of({gen::straight_track("s", {0, 0}, {4, 2}, 0.0, 2, 1.0)}, 1.0, 1.0);
    const auto up = resample(clip, 4.0);
    const auto& p = up.tracks[0].points;
    ASSERT_EQ(p.size(), 5u);
    for (int k = 0; k < 5; ++k) {
        EXPECT_DOUBLE_EQ(p[k].t, k / 4.0);
        EXPECT_DOUBLE_EQ(p[k].x, k * 1.0);
        EXPECT_DOUBLE_EQ(p[k].y, k * 0.5);
    }
}

TEST(Resample, SameRateIsIdentity) {
    gen::Source src(1);
    auto clip = gen::clip_of({gen::wander_track(src, "a", 9.0, 30)}, 9.0, 10.0);
    const auto same = resample(clip, 9.0);
    EXPECT_EQ(same.tracks, clip.tracks);
    EXPECT_EQ(same.rate, 9.0);
}

TEST(Resample, NonMultipleRateThrows) {
    auto clip = gen::clip_of({gen::straight_track("s", {0, 0}, {1, 0}, 0.0, 3, 9.0)}, 9.0, 1.0);
    EXPECT_THROW(resample(clip, 20.0), InvalidArgument);
    EXPECT_THROW(resample(clip, 4.5), InvalidArgument);
    EXPECT_THROW(resample(clip, 0.0), InvalidArgument);
}

TEST(ResampleProperty, NineToSeventyTwoKeepsOriginalsAndDownsamplesBack) {
    gen::Source src(9);
    for (int c = 0; c < 100; ++c) {
        std::vector<Track> tracks;
        for (int k = 0; k < 5; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 40));
        const auto clip = gen::clip_of(tracks, 9.0, 10.0);
        const auto up = resample(clip, 72.0);
        ASSERT_EQ(up.rate, 72.0);
        for (std::size_t k = 0; k < clip.tracks.size(); ++k) {
            const auto& src_pts = clip.tracks[k].points;
            const auto& dense = up.tracks[k].points;
            ASSERT_EQ(dense.size(), (src_pts.size() - 1) * 8 + 1);
            // Down-sampling at the original instants gives the input back bit-exactly.
            for (std::size_t i = 0; i < src_pts.size(); ++i) EXPECT_EQ(dense[i * 8], src_pts[i]);
            // Seven interpolants per interval, collinear with the endpoints.
            for (std::size_t i = 0; i + 1 < src_pts.size(); ++i)
                for (int j = 1; j < 8; ++j) {
                    const auto& a = src_pts[i];
                    const auto& b = src_pts[i + 1];
                    const auto& q = dense[i * 8 + j];
                    EXPECT_NEAR(cross(b.position() - a.position(), q.position() - a.position()), 0.0, 1e-12);
                }
        }
    }
}

// --- clip search -----------------------------------------------------------

namespace {

// 120 walkers packed into [200 s, 260 s]; sparse traffic elsewhere.
std::vector<Track> dataset_with_one_busy_window() {
    std::vector<Track> tracks;
    for (int i = 0; i < 120; ++i)
        tracks.push_back(gen::straight_track("busy" + std::to_string(i), {1.0 + 0.1 * (i % 100), 1.0 + 0.05 * i},
                                             {0.01, 0.0}, 200.0, 60 * 9 + 1, 9.0));
    for (int i = 0; i < 10; ++i)
        tracks.push_back(gen::straight_track("quiet" + std::to_string(i), {2.0, 2.0}, {0.05, 0.0}, 40.0 * i, 20, 9.0));
    return tracks;
}

}  // namespace

TEST(ExtractClips, FindsTheOnlyWindowInRange) {
    const auto tracks = dataset_with_one_busy_window();
    const auto arena = forum_arena();
    // Only windows overlapping the busy span reach the population range.
    const auto clips = extract_clips(tracks, 60.0, {104, 194}, 1, 7, arena, 100000);
    ASSERT_EQ(clips.size(), 1u);
    EXPECT_GT(clips[0].start, 140.0);
    EXPECT_LT(clips[0].start, 260.0);
    EXPECT_GE(clips[0].population(), 104u);
}

TEST(ExtractClips, UnboundedRangeAcceptsFirstDraw) {
    const auto tracks = dataset_with_one_busy_window();
    const auto a = extract_clips(tracks, 60.0, {}, 3, 42, forum_arena());
    const auto b = extract_clips(tracks, 60.0, {}, 3, 42, forum_arena());
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].start, b[i].start);
        EXPECT_EQ(a[i].tracks, b[i].tracks);
    }
}

TEST(ExtractClips, ImpossibleRangeIsNotFound) {
    const auto tracks = dataset_with_one_busy_window();
    EXPECT_THROW(extract_clips(tracks, 60.0, {1000000, 10000000}, 1, 1, forum_arena(), 500), NotFound);
}

TEST(CutWindow, KeepsSegmentsWithTwoSamples) {
    std::vector<Track> tracks{gen::straight_track("a", {1, 1}, {0.1, 0}, 0.0, 91, 9.0),
                              gen::straight_track("b", {1, 2}, {0.1, 0}, 9.0, 9, 9.0)};
    const auto c = cut_window(tracks, 5.0, 4.0, 9.0, forum_arena());
    ASSERT_EQ(c.tracks.size(), 1u);
    EXPECT_EQ(c.tracks[0].id, "a");
    EXPECT_EQ(c.tracks[0].points.size(), 37u);
    EXPECT_DOUBLE_EQ(c.tracks[0].points.front().t, 5.0);
}

// --- frames ----------------------------------------------------------------

TEST(ToFrames, StraightPlusX) {
    auto clip = gen::clip_of({gen::straight_track("a", {1, 1}, {1, 0}, 0.0, 10, 9.0)}, 9.0, 1.0);
    const auto frames = to_frames(clip);
    ASSERT_EQ(frames.size(), 10u);
    for (const auto& f : frames) {
        EXPECT_EQ(f.agents[0].heading, 0.0);
        EXPECT_NEAR(f.agents[0].speed, 1.0, 1e-12);
    }
}

TEST(ToFrames, StationaryAfterMovingKeepsHeading) {
    auto t = gen::straight_track("a", {1, 1}, {0, 1}, 0.0, 5, 9.0);
    const auto last = t.points.back();
    for (int k = 1; k <= 5; ++k) t.points.push_back({last.t + k / 9.0, last.x, last.y});
    const auto frames = to_frames(gen::clip_of({t}, 9.0, 2.0));
    for (std::size_t i = 5; i < frames.size(); ++i) {
        EXPECT_DOUBLE_EQ(frames[i].agents[0].heading, std::numbers::pi / 2);
        EXPECT_EQ(frames[i].agents[0].speed, 0.0);
    }
}

TEST(ToFrames, Diagonal) {
    auto clip = gen::clip_of({gen::straight_track("a", {1, 1}, {1, 1}, 0.0, 4, 9.0)}, 9.0, 1.0);
    const auto frames = to_frames(clip);
    EXPECT_NEAR(frames[0].agents[0].heading, std::numbers::pi / 4, 1e-12);
    EXPECT_NEAR(frames[0].agents[0].speed, std::sqrt(2.0), 1e-12);
}

TEST(ToFramesProperty, CountsAndSpeeds) {
    gen::Source src(17);
    for (int c = 0; c < 50; ++c) {
        std::vector<Track> tracks;
        const int n = src.integer(1, 12);
        for (int k = 0; k < n; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 30));
        const auto clip = gen::clip_of(tracks, 9.0, 10.0);
        const auto frames = to_frames(clip);
        std::size_t total = 0;
        for (const auto& f : frames) {
            EXPECT_LE(f.agents.size(), clip.population());
            total += f.agents.size();
            for (const auto& a : f.agents) {
                EXPECT_TRUE(std::isfinite(a.heading));
                EXPECT_GE(a.speed, 0.0);
                EXPECT_GE(a.heading, -std::numbers::pi);
                EXPECT_LT(a.heading, std::numbers::pi);
            }
        }
        EXPECT_EQ(total, clip.sample_count());
        // Speed is rate times the Euclidean step to the next sample.
        const auto& pts = clip.tracks[0].points;
        std::size_t seen = 0;
        for (const auto& f : frames)
            for (const auto& a : f.agents)
                if (a.id == clip.tracks[0].id && seen + 1 < pts.size()) {
                    const double expect = 9.0 * distance(pts[seen].position(), pts[seen + 1].position());
                    EXPECT_NEAR(a.speed, expect, 1e-12);
                    ++seen;
                }
    }
}

TEST(Angles, WrapAngle) {
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), -std::numbers::pi);
    EXPECT_NEAR(wrap_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
    EXPECT_NEAR(wrap_angle(-5 * std::numbers::pi), -std::numbers::pi, 1e-12);
}

// --- clip files ------------------------------------------------------------

TEST(ClipFile, RoundTripIsBitExact) {
    gen::Source src(23);
    std::vector<Track> tracks;
    for (int k = 0; k < 6; ++k) tracks.push_back(gen::wander_track(src, "w" + std::to_string(k), 9.0, 25));
    auto clip = gen::clip_of(tracks, 9.0, 10.0);
    clip.arena = forum_arena();
    clip.start = 12.5;
    std::stringstream ss;
    write_clip(ss, clip, {{"command", "test"}, {"seed", "4"}});
    ClipFileHeader header;
    const auto back = read_clip(ss, forum_arena(), &header);
    EXPECT_EQ(back.tracks.size(), clip.tracks.size());
    for (std::size_t k = 0; k < clip.tracks.size(); ++k) EXPECT_EQ(back.tracks[k].points, clip.tracks[k].points);
    EXPECT_EQ(back.start, 12.5);
    EXPECT_EQ(back.rate, 9.0);
    ASSERT_TRUE(header.rate);
    bool found_seed = false;
    for (const auto& [k, v] : header.extra) found_seed = found_seed || (k == "seed" && v == "4");
    EXPECT_TRUE(found_seed);
}

TEST(ClipFile, ArenaMismatchIsRejected) {
    auto clip = gen::clip_of({gen::straight_track("a", {1, 1}, {1, 0}, 0.0, 3, 9.0)}, 9.0, 1.0);
    clip.arena.width = 20;
    std::stringstream ss;
    write_clip(ss, clip);
    EXPECT_THROW(read_clip(ss, forum_arena()), Error);
}
