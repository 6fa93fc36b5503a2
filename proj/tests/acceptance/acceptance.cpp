// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "crowdtt/analysis.hpp"
#include "crowdtt/metrics.hpp"
#include "crowdtt/noise.hpp"
#include "crowdtt/render.hpp"
#include "crowdtt/sfm.hpp"
#include "crowdtt/trajectory.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace crowdtt;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Uniform routes between distinct forum openings, `n` entries over `spread` s.
sfm::Scenario forum_scenario(std::size_t n, std::uint64_t seed, double spread, double duration) {
    sfm::Scenario s;
    s.arena = forum_arena();
    s.seed = seed;
    s.duration = duration;
    gen::Source src(1000 + seed);
    for (int o = 1; o <= 11; ++o)
        for (int d = 1; d <= 11; ++d)
            if (o != d) s.routes.probabilities[{o, d}] = 1.0 / 110.0;
    for (std::size_t i = 0; i < n; ++i)
        s.entries.observations.push_back({std::floor(src.uniform(0.0, spread) * 9.0) / 9.0, src.integer(1, 11)});
    std::stable_sort(s.entries.observations.begin(), s.entries.observations.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    return s;
}

std::string clip_bytes(const sfm::SimOutput& out, const sfm::Scenario& s) {
    std::ostringstream ss;
    write_clip(ss, sfm::to_clip(out, s));
    return ss.str();
}

// Counters shared by every simulation run in this binary.
struct ConstraintLog {
    std::size_t samples = 0;
    std::size_t penetrations = 0;
    std::size_t overspeed = 0;
    double top_speed = 0.0;

    void check(const sfm::SimOutput& out, const sfm::Scenario& s) {
        penetrations += out.wall_crossings;
        for (std::size_t k = 0; k < out.tracks.size(); ++k) {
            for (const auto& p : out.tracks[k].points) {
                ++samples;
                if (!s.arena.in_bounds(p.position()) || s.arena.inside_obstacle(p.position())) ++penetrations;
            }
            for (const auto& v : out.velocities[k]) {
                top_speed = std::max(top_speed, norm(v));
                if (norm(v) > s.params.speed_max) ++overspeed;
            }
        }
    }
};

ConstraintLog constraints;

Outcome metric_oracle() {
    const auto t0 = Clock::now();
    gen::Source src(424242);
    double worst = 0.0;
    bool bounds = true;
    bool rotation = true;
    for (std::size_t c = 0; c < 1000; ++c) {
        const std::size_t n = 1 + src.index(500);
        Frame f = gen::frame(src, n, gen::layout_for(c));
        const double phi = *metrics::polarization(f);
        worst = std::max(worst, std::abs(phi - *oracle::polarization(f)));
        if (n >= 2) worst = std::max(worst, std::abs(*metrics::nnd(f) - *oracle::nnd(f)));
        if (!(phi >= 0.0 && phi <= 1.0)) bounds = false;
        const double shift = src.angle();
        for (auto& a : f.agents) a.heading = wrap_angle(a.heading + shift);
        if (std::abs(*metrics::polarization(f) - phi) > 1e-12) rotation = false;
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-12 && bounds && rotation && elapsed < 60.0,
            fmt("1000 frames, max |diff| %.3g, bounds %s, rotation %s, %.2f s", worst, bounds ? "ok" : "violated",
                rotation ? "ok" : "violated", elapsed)};
}

Outcome analytic_metrics() {
    Frame aligned;
    for (int i = 0; i < 50; ++i) aligned.agents.push_back({"a" + std::to_string(i), {0.1 * i, 0.2 * i}, 0.9, 1.0});
    Frame anti;
    anti.agents = {{"a", {0, 0}, 0.0, 1.0}, {"b", {1, 0}, -std::numbers::pi, 1.0}};
    Frame pair;
    pair.agents = {{"a", {0, 0}, 0.0, 1.0}, {"b", {3, 4}, 0.0, 1.0}};
    const double phi1 = *metrics::polarization(aligned);
    const double phi0 = *metrics::polarization(anti);
    const double d = *metrics::nnd(pair);
    return {phi1 == 1.0 && phi0 <= 1e-12 && d == 5.0, fmt("aligned %.17g, antiparallel %.3g, nnd %.17g", phi1, phi0, d)};
}

Outcome determinism() {
    std::vector<sfm::Scenario> batch;
    for (std::uint64_t s = 0; s < 4; ++s) batch.push_back(forum_scenario(60, 500 + s, 30.0, 40.0));
    std::vector<std::string> reference;
    for (const auto& s : batch) {
        const auto out = sfm::integrate(s);
        constraints.check(out, s);
        reference.push_back(clip_bytes(out, s));
    }
    bool same = true;
    for (int rep = 0; rep < 2; ++rep)
        for (std::size_t i = 0; i < batch.size(); ++i) same = same && clip_bytes(sfm::integrate(batch[i]), batch[i]) == reference[i];
    for (unsigned threads : {1u, 2u, 4u}) {
        const auto outs = sfm::integrate_batch(batch, threads);
        for (std::size_t i = 0; i < batch.size(); ++i) same = same && clip_bytes(outs[i], batch[i]) == reference[i];
    }
    return {same, fmt("%zu scenarios, 3 sequential runs, thread counts 1/2/4: %s", batch.size(),
                      same ? "byte-identical" : "outputs differ")};
}

Outcome free_flow() {
    sfm::SfmParams p;
    p.ped_body_potential = 0.0;
    p.obstacle_body_potential = 0.0;
    const auto fixture = sfm::head_on_fixture(p, 0.0, true);
    const auto out = sfm::integrate(fixture.scenario, fixture.schedule);
    constraints.check(out, fixture.scenario);
    if (out.tracks.size() != 1) return {false, "expected one pedestrian"};
    const double v0 = fixture.schedule[0].desired_speed;
    const double tau = v0 / p.acceleration;
    double worst = 0.0;
    const auto& pts = out.tracks[0].points;
    for (std::size_t i = 0; i < pts.size(); ++i)
        worst = std::max(worst, std::abs(norm(out.velocities[0][i]) - oracle::free_flow_speed(v0, tau, pts[i].t)));
    return {worst <= 1e-3 && pts.size() > 10, fmt("%zu samples, max |v - v0(1-exp(-t/tau))| = %.3g m/s", pts.size(), worst)};
}

Outcome forum_speed() {
    const auto t0 = Clock::now();
    std::vector<sfm::Scenario> runs;
    for (std::uint64_t r = 0; r < 20; ++r) runs.push_back(forum_scenario(139, r, 59.0, 60.0));
    const auto outs = sfm::integrate_batch(runs, 4);
    double sum = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        constraints.check(outs[r], runs[r]);
        sum += outs[r].realized_mean_speed;
    }
    const double mean = sum / static_cast<double>(runs.size());
    const double elapsed = seconds_since(t0);
    return {std::abs(mean - 1.63) <= 0.2 && elapsed < 300.0,
            fmt("20 runs x 139 pedestrians x 60 s: mean realized speed %.4f m/s (target 1.63 +/- 0.2), %.1f s", mean,
                elapsed)};
}

Outcome hard_constraints() {
    const double clearance = sfm::head_on_clearance(sfm::head_on_fixture(sfm::SfmParams{}));
    const bool ok = constraints.penetrations == 0 && constraints.overspeed == 0 && clearance >= 0.4 &&
                    constraints.samples > 0;
    return {ok, fmt("%zu samples: %zu penetrations, %zu over 3.2 m/s (top %.4f), head-on clearance %.4f m",
                    constraints.samples, constraints.penetrations, constraints.overspeed, constraints.top_speed,
                    clearance)};
}

Outcome noise_contract() {
    gen::Source src(31);
    std::vector<Frame> frames;
    for (int k = 0; k < 400; ++k) {
        Frame f = gen::frame(src, 50, gen::Layout::uniform);
        f.t = k / 72.0;
        frames.push_back(std::move(f));
    }
    NoiseParams np;
    np.seed = 17;
    const auto r = apply_flicks(frames, np);
    bool positions = r.frames.size() == frames.size();
    for (std::size_t k = 0; positions && k < frames.size(); ++k)
        for (std::size_t i = 0; i < frames[k].agents.size(); ++i)
            positions = positions && r.frames[k].agents[i].position == frames[k].agents[i].position;
    const double rate = static_cast<double>(r.flicked) / static_cast<double>(r.agent_steps);
    return {positions && r.agent_steps >= 10000 && rate >= 0.14 && rate <= 0.16,
            fmt("%zu agent-steps, flick rate %.4f, positions %s", r.agent_steps, rate,
                positions ? "bit-identical" : "changed")};
}

Outcome resampling() {
    std::size_t intervals = 0;
    bool exact = true;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Vec2 from{1.0 + 0.3 * k, 2.0 + 0.1 * k};
        const Vec2 vel{0.9 + 0.01 * k, -0.4 + 0.05 * k};
        const auto clip = gen::clip_of({gen::straight_track("s" + std::to_string(k), from, vel, 0.0, 50, 9.0)}, 9.0, 50 / 9.0);
        const auto up = resample(clip, 72.0);
        const auto& src_pts = clip.tracks[0].points;
        const auto& dense = up.tracks[0].points;
        if (dense.size() != (src_pts.size() - 1) * 8 + 1) return {false, "wrong number of samples"};
        for (std::size_t i = 0; i < src_pts.size(); ++i) exact = exact && dense[i * 8] == src_pts[i];
        for (std::size_t i = 0; i + 1 < src_pts.size(); ++i) {
            ++intervals;
            const Vec2 a = src_pts[i].position();
            const Vec2 b = src_pts[i + 1].position();
            for (int j = 1; j < 8; ++j)
                worst = std::max(worst, std::abs(cross(b - a, dense[i * 8 + j].position() - a)) / norm(b - a));
        }
    }
    return {exact && worst <= 1e-12,
            fmt("%zu intervals, originals %s, max off-line distance %.3g m", intervals,
                exact ? "bit-exact" : "altered", worst)};
}

Outcome trial_composition() {
    std::vector<render::ClipPair> pairs;
    for (int k = 0; k < render::kPairsPerTrial; ++k) {
        std::vector<Track> a{gen::straight_track("r" + std::to_string(k), {1, 1}, {0.3, 0.2}, 0.0, 30 * 72 + 1, 72.0)};
        std::vector<Track> b{gen::straight_track("s" + std::to_string(k), {2, 1}, {0.2, 0.3}, 0.0, 30 * 72 + 1, 72.0)};
        render::ClipPair p;
        p.real = gen::clip_of(a, 72.0, 30.0);
        p.simulated = gen::clip_of(b, 72.0, 30.0);
        p.simulated.source = TrackSource::simulated;
        pairs.push_back(std::move(p));
    }
    render::RenderStyle style;
    const auto trial = render::compose_trial(pairs, render::kReferenceKeySeed, style);
    const double seconds = static_cast<double>(trial.timeline_size()) / trial.manifest.frame_rate;
    const std::string key = trial.manifest.answer_key;
    std::size_t a = 0;
    const std::size_t seeds = 10000;
    for (std::uint64_t s = 0; s < seeds; ++s)
        for (char c : render::answer_key_for_seed(s)) a += c == 'A';
    const double freq = static_cast<double>(a) / static_cast<double>(seeds * render::kPairsPerTrial);
    return {seconds == 198.0 && key == "AABABB" && std::abs(freq - 0.5) <= 0.02,
            fmt("%zu frames = %.3f s, seed %llu -> %s, A-frequency %.4f over %zu seeds", trial.timeline_size(), seconds,
                static_cast<unsigned long long>(render::kReferenceKeySeed), key.c_str(), freq, seeds)};
}

Outcome scoring_fixture() {
    const auto t0 = Clock::now();
    const auto file = analysis::load_answer_sheets(std::string(CROWDTT_FIXTURES_DIR) + "/reference_results.csv");
    const auto d = analysis::distribution(file.sheets, "AABABB");
    const double expected = analysis::binomial_expected(384).partition_count();
    const double s0 = 100.0 * d.share(0);
    const double s6 = 100.0 * d.share(6);
    const bool ok = std::abs(d.mean - 1.6) <= 0.005 && std::abs(s0 - 36.46) <= 0.01 && std::abs(s6 - 3.65) <= 0.01 &&
                    d.partitioned == 154 && expected == 12.0;
    return {ok, fmt("n %zu, mean %.5f, score0 %.4f%%, score6 %.4f%%, {0,6} %zu, expected {0,6} at n=384 %.6g, %.3f s",
                    d.n, d.mean, s0, s6, d.partitioned, expected, seconds_since(t0))};
}

Outcome sweep_property() {
    const std::vector<std::size_t> sizes{10, 25, 50, 100, 200};
    const auto pts = metrics::uniform_sweep(sizes, 15.8, 11.86, 20, 2024);
    bool decreasing = pts.size() == sizes.size();
    std::string values;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0 && !(pts[i].mean_nnd < pts[i - 1].mean_nnd)) decreasing = false;
        values += fmt("%s%zu:%.4f", i ? " " : "", pts[i].crowd_size, pts[i].mean_nnd);
    }
    return {decreasing, "mean NND " + values};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    // hard_constraints reads counters filled by the simulation criteria before it.
    const std::vector<Criterion> criteria{
        {"metric-oracle-equivalence", metric_oracle},
        {"analytic-metric-cases", analytic_metrics},
        {"simulator-determinism", determinism},
        {"free-flow", free_flow},
        {"forum-scale-speed", forum_speed},
        {"hard-constraints", hard_constraints},
        {"noise-contract", noise_contract},
        {"resampling", resampling},
        {"trial-composition", trial_composition},
        {"scoring-fixture", scoring_fixture},
        {"sweep-property", sweep_property},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
