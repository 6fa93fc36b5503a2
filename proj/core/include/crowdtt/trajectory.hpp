#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crowdtt/geometry.hpp"

namespace crowdtt {

enum class TrackSource { real, simulated };

const char* to_string(TrackSource s);
TrackSource parse_track_source(const std::string& s);

struct TrackPoint {
    double t = 0.0;  // seconds
    double x = 0.0;  // metres
    double y = 0.0;  // metres

    Vec2 position() const { return {x, y}; }
    bool operator==(const TrackPoint&) const = default;
};

struct Track {
    std::string id;
    TrackSource source = TrackSource::real;
    std::vector<TrackPoint> points;
    double native_rate = 9.0;  // Hz

    bool operator==(const Track&) const = default;
};

struct Clip {
    double start = 0.0;     // dataset time, seconds
    double duration = 0.0;  // seconds
    std::vector<Track> tracks;
    double rate = 9.0;  // Hz
    ArenaGeometry arena;
    TrackSource source = TrackSource::real;

    // Number of distinct track ids.
    std::size_t population() const;
    std::size_t sample_count() const;
};

struct AgentState {
    std::string id;
    Vec2 position;
    double heading = 0.0;  // radians in [-pi, pi)
    double speed = 0.0;    // m/s
};

struct Frame {
    double t = 0.0;
    std::vector<AgentState> agents;
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

// Sample index of time `t` on a grid of `rate` Hz.
long long frame_index(double t, double rate);

// ---------------------------------------------------------------------------
// Ingestion

struct IngestConfig {
    double scale_x = 1.0;  // metres per source unit
    double scale_y = 1.0;
    double native_rate = 9.0;
    bool flip_y = false;  // source y grows downwards (image rows)
    double arena_width = 15.8;
    double arena_height = 11.86;
};

// scale_x, scale_y, native_rate, flip_y, arena_width, arena_height.
IngestConfig parse_ingest_config(std::istream& in);
IngestConfig load_ingest_config(const std::string& path);

struct RejectedTrack {
    std::string id;
    std::string reason;
};

struct IngestResult {
    std::vector<Track> tracks;
    std::vector<RejectedTrack> rejected;
};

// Reads `track_id,frame_index,x,y` rows (header required, `#` comments).
// Malformed rows throw ParseError; tracks with non-increasing time, fewer
// than two points or out-of-arena points are dropped and reported.
IngestResult ingest_tracks(std::istream& raw, const IngestConfig& config);

// ---------------------------------------------------------------------------
// Gap repair and resampling

inline constexpr int kDefaultMaxGap = 5;

struct GapRepair {
    std::vector<Track> tracks;
    std::size_t interpolated_points = 0;
    std::size_t splits = 0;
    std::size_t dropped_fragments = 0;  // single-point pieces left by a split
};

// Linearly fills outages of at most `max_gap` missing frames; longer outages
// split the track. Split pieces are suffixed `~1`, `~2`, ...
GapRepair fill_gaps(const Track& track, int max_gap = kDefaultMaxGap);

// Inserts linear interpolants so the clip is sampled at `target_rate`.
// Original samples are copied unchanged. Throws InvalidArgument unless
// target_rate is a positive integer multiple of clip.rate.
Clip resample(const Clip& clip, double target_rate);

// ---------------------------------------------------------------------------
// Clip search

struct PopulationRange {
    std::size_t min = 0;
    std::size_t max = SIZE_MAX;

    bool contains(std::size_t n) const { return n >= min && n <= max; }
};

inline constexpr std::size_t kClipSearchBudget = 10000;

// Window [start, start + duration] cut from `tracks` (all at `rate`). Track
// segments with at least two samples in the window are kept.
Clip cut_window(const std::vector<Track>& tracks, double start, double duration, double rate,
                const ArenaGeometry& arena);

// Draws window starts uniformly over the dataset's frame grid until `n`
// distinct windows have a population inside `population`. Throws NotFound
// after `budget` draws.
std::vector<Clip> extract_clips(const std::vector<Track>& tracks, double duration, PopulationRange population,
                                std::size_t n, std::uint64_t seed, const ArenaGeometry& arena,
                                std::size_t budget = kClipSearchBudget);

// ---------------------------------------------------------------------------
// Frames

inline constexpr double kStationaryStep = 0.01;  // metres per sample

std::vector<Frame> to_frames(const Clip& clip);

// ---------------------------------------------------------------------------
// Canonical track / clip file

struct ClipFileHeader {
    std::optional<double> rate;
    std::optional<double> start;
    std::optional<double> duration;
    std::optional<std::pair<double, double>> arena_size;
    std::optional<TrackSource> source;
    std::vector<std::pair<std::string, std::string>> extra;  // other `# key=value` lines
};

// Header block of `# key=value` lines then `track_id,frame_index,x,y` rows.
// `stamps` are extra provenance lines (config hash, seeds).
void write_clip(std::ostream& out, const Clip& clip,
                const std::vector<std::pair<std::string, std::string>>& stamps = {});
void save_clip(const std::string& path, const Clip& clip,
               const std::vector<std::pair<std::string, std::string>>& stamps = {});

// Reads a canonical clip file; coordinates are already in metres. The
// arena is taken from `arena` (its size must match the header if present).
Clip read_clip(std::istream& in, const ArenaGeometry& arena, ClipFileHeader* header = nullptr);
Clip load_clip(const std::string& path, const ArenaGeometry& arena, ClipFileHeader* header = nullptr);

}  // namespace crowdtt
