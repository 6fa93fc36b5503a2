#include "crowdtt/noise.hpp"

#include <map>
#include <string>

#include "crowdtt/error.hpp"
#include "crowdtt/rng.hpp"

namespace crowdtt {

void NoiseParams::validate() const {
    if (!(flick_probability >= 0.0 && flick_probability <= 1.0))
        throw InvalidArgument("flick_probability must lie in [0, 1]");
    if (!(max_flick >= 0.0)) throw InvalidArgument("max_flick must be non-negative");
    if (hold_frames < 1) throw InvalidArgument("hold_frames must be at least 1");
}

double angle_difference(double a, double b) { return wrap_angle(a - b); }

FlickResult apply_flicks(const std::vector<Frame>& frames, const NoiseParams& params) {
    params.validate();
    FlickResult out;
    out.frames = frames;
    if (!params.enabled || params.flick_probability == 0.0) {
        for (const auto& f : frames) out.agent_steps += f.agents.size();
        return out;
    }

    Rng rng(params.seed);
    // Per-agent offset currently held, and the block it was drawn for.
    struct Held {
        long long block = -1;
        double offset = 0.0;
    };
    std::map<std::string, Held> held;

    for (std::size_t k = 0; k < out.frames.size(); ++k) {
        const long long block = static_cast<long long>(k) / params.hold_frames;
        for (auto& agent : out.frames[k].agents) {
            ++out.agent_steps;
            Held& h = held[agent.id];
            if (h.block != block) {
                h.block = block;
                h.offset = rng.bernoulli(params.flick_probability)
                               ? rng.uniform(-params.max_flick, params.max_flick)
                               : 0.0;
            }
            if (h.offset != 0.0) {
                agent.heading = wrap_angle(agent.heading + h.offset);
                ++out.flicked;
            }
        }
    }
    return out;
}

}  // namespace crowdtt
