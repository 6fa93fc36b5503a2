#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "crowdtt/trajectory.hpp"

namespace crowdtt {

// Display-only heading "flicks" that mimic detector artefacts.
struct NoiseParams {
    double flick_probability = 0.15;           // per agent per step
    double max_flick = std::numbers::pi / 4;   // radians
    std::uint64_t seed = 0;
    // Consecutive frames sharing one draw. 1 flicks per frame; set it to the
    // upsampling factor to flick per source time-step after resampling.
    int hold_frames = 1;
    bool enabled = true;  // simulated clips only; real data carries its own

    void validate() const;
};

struct FlickResult {
    std::vector<Frame> frames;
    std::size_t agent_steps = 0;
    std::size_t flicked = 0;
};

// Offsets each displayed heading, with probability flick_probability, by a
// uniform draw in [-max_flick, max_flick]. Positions and speeds are copied
// untouched and a flick never carries into the next step's baseline.
FlickResult apply_flicks(const std::vector<Frame>& frames, const NoiseParams& params);

// Smallest signed difference a - b, wrapped to [-pi, pi).
double angle_difference(double a, double b);

}  // namespace crowdtt
