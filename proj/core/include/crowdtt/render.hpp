#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdtt/noise.hpp"
#include "crowdtt/trajectory.hpp"

namespace crowdtt::render {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB, top row first

    Image() = default;
    Image(int w, int h, Rgb fill);

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    bool operator==(const Image&) const = default;
};

// One style object is shared by both sides of every pair.
struct RenderStyle {
    int width = 640;
    int height = 480;
    double metres_per_pixel = 0.0;  // 0: fit the arena to the canvas
    int margin_px = 10;
    double agent_radius_px = 5.0;
    double arrow_length_px = 12.0;
    int divider_px = 4;
    double frame_rate = 72.0;
    Rgb background{255, 255, 255};
    Rgb boundary{160, 160, 160};
    Rgb agent{40, 70, 160};
    Rgb arrow{200, 40, 40};
    Rgb divider{0, 0, 0};
    Rgb card{32, 32, 32};
    Rgb card_mark{230, 230, 230};

    double scale_for(const ArenaGeometry& arena) const;
};

struct RenderStats {
    std::size_t clamped_agents = 0;  // agents outside the canvas, drawn at the edge
};

// Filled circle per agent with a fixed-length heading arrow, over the
// arena outline. Pixels depend only on the inputs.
Image render_frame(const Frame& frame, const ArenaGeometry& arena, const RenderStyle& style,
                   RenderStats* stats = nullptr);

// Lazily rendered image sequence for one clip at style.frame_rate.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::vector<Frame> frames, double start, double source_rate, std::size_t count,
                  double playback, ArenaGeometry arena, RenderStyle style);

    std::size_t size() const { return count_; }
    double seconds() const { return static_cast<double>(count_) / style_.frame_rate; }
    double playback() const { return playback_; }
    // Image i shows clip time start + i * playback / frame_rate.
    Image image(std::size_t i, RenderStats* stats = nullptr) const;
    const Frame* source_frame(std::size_t i) const;

private:
    std::vector<Frame> frames_;
    std::map<long long, std::size_t> by_index_;
    double start_ = 0.0;
    double source_rate_ = 72.0;
    std::size_t count_ = 0;
    double playback_ = 1.0;
    ArenaGeometry arena_;
    RenderStyle style_;
};

// The clip must already be at style.frame_rate (InvalidArgument otherwise).
// A playback factor f shows f seconds of clip per second of video, so the
// image count is duration * rate / f. `limit_seconds` truncates the video;
// asking for more video than the clip holds is an error (no looping).
FrameSequence render_clip(const Clip& clip, const RenderStyle& style, double playback = 1.0,
                          std::optional<double> limit_seconds = std::nullopt);
FrameSequence render_frames(std::vector<Frame> frames, const Clip& clip, const RenderStyle& style,
                            double playback = 1.0, std::optional<double> limit_seconds = std::nullopt);

// Left | divider | right.
Image side_by_side(const Image& left, const Image& right, const RenderStyle& style);
// Blank card with `pair_number` marks, shown before each pair.
Image pause_card(int pair_number, const RenderStyle& style);

// ---------------------------------------------------------------------------
// Trial composition

enum class Side { A, B };
char to_char(Side s);

inline constexpr int kPairsPerTrial = 6;
inline constexpr double kPauseSeconds = 3.0;
inline constexpr double kSegmentSeconds = 30.0;
// Seed whose coin flips give the reference answer key AABABB.
inline constexpr std::uint64_t kReferenceKeySeed = 43;

struct ClipPair {
    Clip real;
    Clip simulated;
    double real_playback = 1.0;
    double simulated_playback = 1.0;
};

struct PairEntry {
    int index = 0;  // 1-based
    Side real_side = Side::A;
    std::size_t population = 0;
    std::size_t pause_frames = 0;
    std::size_t segment_frames = 0;
    std::string pause_card;
    std::string left_frames;   // printf-style pattern relative to the trial root
    std::string right_frames;
};

struct TrialManifest {
    std::vector<PairEntry> pairs;
    double pause_seconds = kPauseSeconds;
    double segment_seconds = kSegmentSeconds;
    double frame_rate = 72.0;
    double total_seconds = 0.0;
    std::string answer_key;  // one letter per pair; never written to the manifest file
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> stamps;
};

// Real side per pair from seeded coin flips.
std::string answer_key_for_seed(std::uint64_t seed, int pairs = kPairsPerTrial);

struct TrialOptions {
    std::optional<NoiseParams> simulated_noise;  // applied to simulated frames only
    double pause_seconds = kPauseSeconds;
    double segment_seconds = kSegmentSeconds;
};

struct Trial {
    TrialManifest manifest;
    std::vector<FrameSequence> left;
    std::vector<FrameSequence> right;
    RenderStyle style;

    // Full timeline: for each pair, the pause card then the composed pair.
    std::size_t timeline_size() const;
    Image timeline_image(std::size_t i) const;
};

// Populations must match within each pair (InvalidArgument otherwise).
Trial compose_trial(const std::vector<ClipPair>& pairs, std::uint64_t seed, const RenderStyle& style,
                    const TrialOptions& options = {});

void write_manifest(std::ostream& out, const TrialManifest& manifest);
void write_answer_key(std::ostream& out, const TrialManifest& manifest);
TrialManifest read_manifest(std::istream& in);

struct WriteOptions {
    bool side_frames = true;   // pair<k>/A and pair<k>/B sequences
    bool composite = false;    // pair<k>/AB side-by-side sequence
    unsigned threads = 1;
};

// Writes manifest.txt, answer_key.txt (restricted), pause cards and frames.
void write_trial(const Trial& trial, const std::string& directory, const WriteOptions& options = {});

void write_png(const std::string& path, const Image& image);
Image read_png(const std::string& path);

}  // namespace crowdtt::render
