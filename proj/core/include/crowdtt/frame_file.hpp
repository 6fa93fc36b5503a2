#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "crowdtt/trajectory.hpp"

namespace crowdtt {

// Per-frame display states (positions plus displayed heading), the format
// passed between noise and rendering:
//   # rate=72
//   # start=0
//   # duration=60
//   # source=simulated
//   t,agent_id,x,y,heading,speed
struct FrameFile {
    std::vector<Frame> frames;
    double rate = 72.0;
    double start = 0.0;
    double duration = 0.0;
    TrackSource source = TrackSource::simulated;
    std::vector<std::pair<std::string, std::string>> stamps;

    std::size_t population() const;
    // Metadata-only clip (no tracks) for rendering.
    Clip clip_header(const ArenaGeometry& arena) const;
};

FrameFile frames_from_clip(const Clip& clip);

void write_frames(std::ostream& out, const FrameFile& file);
FrameFile read_frames(std::istream& in);
void save_frames(const std::string& path, const FrameFile& file);
FrameFile load_frames(const std::string& path);

}  // namespace crowdtt
