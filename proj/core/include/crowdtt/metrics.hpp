#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdtt/trajectory.hpp"

namespace crowdtt::metrics {

// Heading alignment |sum exp(i*theta)| / N, in [0, 1]. Empty when N = 0.
std::optional<double> polarization(const Frame& frame);

// Mean distance from each agent to its closest other agent. Empty when
// N < 2. Uses a uniform grid for large frames; the result is identical to
// the all-pairs computation.
std::optional<double> nnd(const Frame& frame);

// Per-point nearest-neighbour distances over a uniform grid. Exposed for
// benchmarking and tests; requires at least two points.
std::vector<double> nearest_neighbour_distances(std::span<const Vec2> points);

struct MetricSeries {
    std::vector<double> times;
    std::vector<double> values;
    double mean = 0.0;
    std::size_t population = 0;
    std::size_t skipped = 0;  // frames where the metric is undefined
};

struct ClipMetrics {
    MetricSeries polarization;
    MetricSeries nnd;
};

// Throws InvalidArgument if no frame holds an agent.
ClipMetrics clip_metrics(const Clip& clip);
ClipMetrics frame_metrics(const std::vector<Frame>& frames, std::size_t population);

struct SweepPoint {
    std::size_t crowd_size = 0;
    double mean_nnd = 0.0;
    double mean_polarization = 0.0;
    std::string label;
};

struct LabelledClip {
    std::string label;  // e.g. "real", "simulated"
    const Clip* clip = nullptr;
};

// One frame of `n` agents at uniform positions in [0,width]x[0,height] with
// uniform headings; ids are "u0", "u1", ...
Frame uniform_crowd(std::size_t n, double width, double height, std::uint64_t seed);

// Synthetic sweep: for each size, mean NND and polarization over `reps`
// independent uniform frames (label "uniform").
std::vector<SweepPoint> uniform_sweep(std::span<const std::size_t> sizes, double width, double height,
                                      std::size_t reps, std::uint64_t seed);

// One point per clip, ordered by crowd size then label.
std::vector<SweepPoint> sweep(std::span<const LabelledClip> clips);

// `t,value` rows.
void write_series(std::ostream& out, const MetricSeries& series);
// `size,nnd,polarization,label` rows.
void write_sweep(std::ostream& out, std::span<const SweepPoint> points);

}  // namespace crowdtt::metrics
