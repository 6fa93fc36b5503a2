#include "context.hpp"

#include <sstream>

#include "crowdtt/error.hpp"
#include "crowdtt/scenario_file.hpp"

namespace crowdtt::cli {

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config, "INI config file with per-stage sections")->check(CLI::ExistingFile);
    flags.seed_opt = cmd.add_option("--seed", flags.seed, "Seed for this stage (overrides the config)");
    flags.out_opt = cmd.add_option("--out", flags.out, "Output file or directory");
}

Context::Context(std::string command, const CommonFlags& flags, std::vector<std::string> argv)
    : command_(std::move(command)), flags_(flags) {
    if (!flags_.config.empty()) config_ = text::KeyValue::load(flags_.config);
    std::ostringstream canon;
    config_.write(canon);
    canon << "--\n" << command_;
    // The output location is not part of the configuration.
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (argv[i] == "--out") {
            ++i;
            continue;
        }
        if (argv[i].rfind("--out=", 0) == 0) continue;
        canon << '\n' << argv[i];
    }
    hash_ = text::hex64(text::fnv1a(canon.str()));
}

std::string Context::get(const CLI::Option* opt, const std::string& flag, const std::string& key,
                         const std::string& fallback) const {
    if (opt && opt->count()) return flag;
    return config_.get_or(key, fallback);
}

double Context::get(const CLI::Option* opt, double flag, const std::string& key, double fallback) const {
    if (opt && opt->count()) return flag;
    return config_.get_double_or(key, fallback);
}

long long Context::get(const CLI::Option* opt, long long flag, const std::string& key, long long fallback) const {
    if (opt && opt->count()) return flag;
    return config_.get_int_or(key, fallback);
}

bool Context::get(const CLI::Option* opt, bool flag, const std::string& key, bool fallback) const {
    if (opt && opt->count()) return flag;
    return config_.get_bool_or(key, fallback);
}

std::uint64_t Context::seed(const std::string& section, std::uint64_t fallback) {
    const std::uint64_t s =
        flags_.seed_opt && flags_.seed_opt->count() ? flags_.seed : config_.get_u64_or(section + ".seed", fallback);
    note_seed(section + ".seed", s);
    return s;
}

std::string Context::out(const std::string& key) const {
    if (flags_.out_opt && flags_.out_opt->count()) return flags_.out;
    if (!key.empty() && config_.has(key)) return config_.get(key);
    throw UsageError(command_ + ": --out is required");
}

std::optional<std::string> Context::maybe_out(const std::string& key) const {
    if (flags_.out_opt && flags_.out_opt->count()) return flags_.out;
    if (!key.empty() && config_.has(key)) return config_.get(key);
    return std::nullopt;
}

ArenaGeometry Context::arena(const CLI::Option* opt, const std::string& flag) const {
    const std::string ref = get(opt, flag, "arena.spec", config_.get_or("arena", "forum"));
    return ref == "forum" ? forum_arena() : load_arena(ref);
}

sfm::SfmParams Context::sfm_params(sfm::SfmParams base) const { return read_sfm_params(config_, "sfm.", base); }

NoiseParams Context::noise_params(NoiseParams base) const { return read_noise_params(config_, "noise.", base); }

render::RenderStyle Context::render_style() const {
    render::RenderStyle s;
    s.width = static_cast<int>(config_.get_int_or("render.width", s.width));
    s.height = static_cast<int>(config_.get_int_or("render.height", s.height));
    s.metres_per_pixel = config_.get_double_or("render.metres_per_pixel", s.metres_per_pixel);
    s.margin_px = static_cast<int>(config_.get_int_or("render.margin_px", s.margin_px));
    s.agent_radius_px = config_.get_double_or("render.agent_radius_px", s.agent_radius_px);
    s.arrow_length_px = config_.get_double_or("render.arrow_length_px", s.arrow_length_px);
    s.divider_px = static_cast<int>(config_.get_int_or("render.divider_px", s.divider_px));
    s.frame_rate = config_.get_double_or("render.frame_rate", s.frame_rate);
    if (s.width <= 0 || s.height <= 0 || !(s.frame_rate > 0.0) || s.divider_px < 0)
        throw InvalidArgument("render size, divider and frame rate must be positive");
    return s;
}

Stamps Context::stamps() const {
    Stamps s{{"command", command_}, {"config_hash", hash_}};
    s.insert(s.end(), seeds_.begin(), seeds_.end());
    return s;
}

void Context::note_seed(const std::string& name, std::uint64_t value) {
    for (auto& [k, v] : seeds_)
        if (k == name) {
            v = std::to_string(value);
            return;
        }
    seeds_.emplace_back(name, std::to_string(value));
}

}  // namespace crowdtt::cli
