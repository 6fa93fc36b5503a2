#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "crowdtt/error.hpp"
#include "crowdtt/metrics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace crowdtt;
using namespace crowdtt::metrics;

namespace {

Frame frame_of(std::vector<std::pair<Vec2, double>> agents) {
    Frame f;
    int i = 0;
    for (const auto& [p, h] : agents) f.agents.push_back({"a" + std::to_string(i++), p, h, 1.0});
    return f;
}

}  // namespace

TEST(Polarization, AlignedIsExactlyOne) {
    for (std::size_t n : {1u, 2u, 7u, 137u}) {
        Frame f;
        for (std::size_t i = 0; i < n; ++i) f.agents.push_back({"a", {0, 0}, 0.7, 1});
        EXPECT_EQ(*polarization(f), 1.0);
    }
}

TEST(Polarization, Antiparallel) {
    EXPECT_LE(*polarization(frame_of({{{0, 0}, 0.0}, {{1, 0}, std::numbers::pi}})), 1e-12);
}

TEST(Polarization, RightAngle) {
    EXPECT_NEAR(*polarization(frame_of({{{0, 0}, 0.0}, {{1, 0}, std::numbers::pi / 2}})), std::sqrt(2.0) / 2, 1e-12);
}

TEST(Polarization, EmptyFrameUndefined) { EXPECT_FALSE(polarization(Frame{})); }

TEST(Nnd, SymmetricPair) { EXPECT_EQ(*nnd(frame_of({{{0, 0}, 0}, {{1.5, 0}, 0}})), 1.5); }

TEST(Nnd, ThreeCollinear) {
    EXPECT_DOUBLE_EQ(*nnd(frame_of({{{0, 0}, 0}, {{1, 0}, 0}, {{3, 0}, 0}})), 4.0 / 3.0);
}

TEST(Nnd, PythagoreanPair) { EXPECT_EQ(*nnd(frame_of({{{0, 0}, 0}, {{3, 4}, 0}})), 5.0); }

TEST(Nnd, FewerThanTwoUndefined) {
    EXPECT_FALSE(nnd(frame_of({{{1, 1}, 0}})));
    EXPECT_THROW(nearest_neighbour_distances(std::vector<Vec2>{{1, 1}}), InvalidArgument);
}

TEST(MetricsProperty, GridMatchesBruteForceExactly) {
    gen::Source src(2024);
    for (std::size_t c = 0; c < 300; ++c) {
        const std::size_t n = 2 + src.index(499);
        const Frame f = gen::frame(src, n, gen::layout_for(c));
        std::vector<Vec2> pts;
        for (const auto& a : f.agents) pts.push_back(a.position);
        const auto fast = nearest_neighbour_distances(pts);
        ASSERT_EQ(fast.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) best = std::min(best, distance(pts[i], pts[j]));
            ASSERT_EQ(fast[i], best) << "case " << c << " layout " << gen::to_string(gen::layout_for(c)) << " point "
                                     << i;
        }
        EXPECT_NEAR(*nnd(f), *oracle::nnd(f), 1e-12);
        EXPECT_NEAR(*polarization(f), *oracle::polarization(f), 1e-12);
    }
}

TEST(MetricsProperty, PolarizationBoundsAndRotationInvariance) {
    gen::Source src(7);
    for (std::size_t c = 0; c < 500; ++c) {
        Frame f = gen::frame(src, 1 + src.index(200), gen::Layout::uniform);
        const double phi = *polarization(f);
        EXPECT_GE(phi, 0.0);
        EXPECT_LE(phi, 1.0);
        const double shift = src.angle();
        for (auto& a : f.agents) a.heading = wrap_angle(a.heading + shift);
        EXPECT_NEAR(*polarization(f), phi, 1e-12);
    }
}

TEST(MetricsProperty, NndInvariantUnderRigidMotionAndOrder) {
    gen::Source src(8);
    for (std::size_t c = 0; c < 200; ++c) {
        Frame f = gen::frame(src, 2 + src.index(150), gen::layout_for(c));
        const double base = *nnd(f);
        const double a = src.angle();
        const Vec2 shift{src.uniform(-50, 50), src.uniform(-50, 50)};
        Frame moved = f;
        for (auto& ag : moved.agents) {
            const Vec2 p = ag.position;
            ag.position = Vec2{std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y} + shift;
        }
        EXPECT_NEAR(*nnd(moved), base, 1e-9);
        std::shuffle(f.agents.begin(), f.agents.end(), src.engine());
        EXPECT_NEAR(*nnd(f), base, 1e-12);
    }
}

TEST(ClipMetrics, StaticAlignedCrowd) {
    std::vector<Track> tracks;
    for (int i = 0; i < 5; ++i) tracks.push_back(gen::straight_track("a" + std::to_string(i), {1.0 + i, 2}, {0.5, 0}, 0, 20, 9.0));
    const auto m = clip_metrics(gen::clip_of(tracks, 9.0, 3.0));
    for (double v : m.polarization.values) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(m.polarization.mean, 1.0);
    for (double v : m.nnd.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ClipMetrics, SingleAgent) {
    const auto m = clip_metrics(gen::clip_of({gen::straight_track("a", {1, 1}, {1, 0}, 0, 10, 9.0)}, 9.0, 2.0));
    EXPECT_EQ(m.polarization.values.size(), 10u);
    EXPECT_EQ(m.polarization.mean, 1.0);
    EXPECT_TRUE(m.nnd.values.empty());
    EXPECT_EQ(m.nnd.skipped, 10u);
    EXPECT_EQ(m.nnd.population, 1u);
}

TEST(ClipMetrics, EmptyClipThrows) { EXPECT_THROW(clip_metrics(gen::clip_of({}, 9.0, 1.0)), InvalidArgument); }

TEST(ClipMetrics, MatchesPerFrameOracle) {
    gen::Source src(99);
    std::vector<Track> tracks;
    for (int i = 0; i < 40; ++i) tracks.push_back(gen::wander_track(src, "w" + std::to_string(i), 9.0, 90));
    const auto clip = gen::clip_of(tracks, 9.0, 10.0);
    const auto frames = to_frames(clip);
    const auto m = clip_metrics(clip);
    std::size_t j = 0;
    for (const auto& f : frames) {
        if (f.agents.size() < 2) continue;
        EXPECT_NEAR(m.nnd.values[j], *oracle::nnd(f), 1e-12);
        ++j;
    }
}

TEST(Sweep, UniformCrowdsStrictlyDecrease) {
    const std::vector<std::size_t> sizes{10, 50, 100};
    const auto points = uniform_sweep(sizes, 15.8, 11.86, 20, 3);
    ASSERT_EQ(points.size(), 3u);
    EXPECT_GT(points[0].mean_nnd, points[1].mean_nnd);
    EXPECT_GT(points[1].mean_nnd, points[2].mean_nnd);
    for (const auto& p : points) EXPECT_EQ(p.label, "uniform");
}

TEST(Sweep, InvalidInput) {
    const std::vector<std::size_t> bad{1};
    EXPECT_THROW(uniform_sweep(bad, 10, 10, 5, 1), InvalidArgument);
    const std::vector<std::size_t> ok{5};
    EXPECT_THROW(uniform_sweep(ok, 10, 10, 0, 1), InvalidArgument);
}

TEST(Sweep, OneClipOnePointAndLabelsSeparate) {
    gen::Source src(5);
    std::vector<Track> a, b;
    for (int i = 0; i < 6; ++i) a.push_back(gen::wander_track(src, "r" + std::to_string(i), 9.0, 30));
    for (int i = 0; i < 6; ++i) b.push_back(gen::wander_track(src, "s" + std::to_string(i), 9.0, 30));
    const auto real = gen::clip_of(a, 9.0, 5.0);
    const auto sim = gen::clip_of(b, 9.0, 5.0);
    std::vector<LabelledClip> one{{"real", &real}};
    EXPECT_EQ(sweep(one).size(), 1u);
    std::vector<LabelledClip> both{{"simulated", &sim}, {"real", &real}};
    const auto pts = sweep(both);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].label, "real");
    EXPECT_EQ(pts[1].label, "simulated");
    std::ostringstream out;
    write_sweep(out, pts);
    EXPECT_NE(out.str().find(",real\n"), std::string::npos);
    EXPECT_NE(out.str().find(",simulated\n"), std::string::npos);
}

TEST(UniformCrowd, SeededAndInBounds) {
    const auto a = uniform_crowd(100, 4, 3, 11);
    const auto b = uniform_crowd(100, 4, 3, 11);
    ASSERT_EQ(a.agents.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_EQ(a.agents[i].position, b.agents[i].position);
        EXPECT_GE(a.agents[i].position.x, 0.0);
        EXPECT_LT(a.agents[i].position.x, 4.0);
        EXPECT_LT(a.agents[i].position.y, 3.0);
    }
}
