#include "crowdtt/scenario_file.hpp"

#include <filesystem>
#include <ostream>

#include "crowdtt/error.hpp"

namespace crowdtt {

namespace {

struct DoubleField {
    const char* name;
    double sfm::SfmParams::*member;
};

constexpr DoubleField kSfmFields[] = {
    {"ped_body_potential", &sfm::SfmParams::ped_body_potential},
    {"ped_recognition_distance", &sfm::SfmParams::ped_recognition_distance},
    {"obstacle_body_potential", &sfm::SfmParams::obstacle_body_potential},
    {"obstacle_repulsion_strength", &sfm::SfmParams::obstacle_repulsion_strength},
    {"ped_radius", &sfm::SfmParams::ped_radius},
    {"speed_mean", &sfm::SfmParams::speed_mean},
    {"speed_min", &sfm::SfmParams::speed_min},
    {"speed_max", &sfm::SfmParams::speed_max},
    {"acceleration", &sfm::SfmParams::acceleration},
    {"search_radius", &sfm::SfmParams::search_radius},
    {"anticipation_time", &sfm::SfmParams::anticipation_time},
    {"speed_sigma", &sfm::SfmParams::speed_sigma},
    {"force_cap", &sfm::SfmParams::force_cap},
    {"portal_margin", &sfm::SfmParams::portal_margin},
    {"spawn_depth", &sfm::SfmParams::spawn_depth},
    {"exit_distance", &sfm::SfmParams::exit_distance},
    {"target_setback", &sfm::SfmParams::target_setback},
};

struct SolverField {
    const char* name;
    double Dopri5Options::*member;
};

constexpr SolverField kSolverFields[] = {
    {"atol", &Dopri5Options::atol},
    {"rtol", &Dopri5Options::rtol},
    {"initial_step", &Dopri5Options::initial_step},
    {"max_step", &Dopri5Options::max_step},
    {"min_step", &Dopri5Options::min_step},
    {"safety", &Dopri5Options::safety},
    {"min_factor", &Dopri5Options::min_factor},
    {"max_factor", &Dopri5Options::max_factor},
};

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    const std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

sfm::SfmParams read_sfm_params(const text::KeyValue& kv, const std::string& prefix, sfm::SfmParams base) {
    for (const auto& f : kSfmFields) base.*f.member = kv.get_double_or(prefix + f.name, base.*f.member);
    for (const auto& f : kSolverFields)
        base.solver.*f.member = kv.get_double_or(prefix + "solver." + f.name, base.solver.*f.member);
    for (const auto& [key, _] : kv.with_prefix(prefix)) {
        const std::string field = key.substr(prefix.size());
        bool known = false;
        for (const auto& f : kSfmFields) known = known || field == f.name;
        for (const auto& f : kSolverFields) known = known || field == std::string("solver.") + f.name;
        if (!known) throw InvalidArgument("unknown simulation parameter `" + key + "`");
    }
    base.validate();
    return base;
}

void put_sfm_params(text::KeyValue& kv, const std::string& prefix, const sfm::SfmParams& params) {
    for (const auto& f : kSfmFields) kv.set(prefix + f.name, params.*f.member);
    for (const auto& f : kSolverFields) kv.set(prefix + "solver." + f.name, params.solver.*f.member);
}

NoiseParams read_noise_params(const text::KeyValue& kv, const std::string& prefix, NoiseParams base) {
    base.enabled = kv.get_bool_or(prefix + "enabled", base.enabled);
    base.flick_probability = kv.get_double_or(prefix + "flick_probability", base.flick_probability);
    base.max_flick = kv.get_double_or(prefix + "max_flick", base.max_flick);
    base.seed = kv.get_u64_or(prefix + "seed", base.seed);
    base.hold_frames = static_cast<int>(kv.get_int_or(prefix + "hold_frames", base.hold_frames));
    base.validate();
    return base;
}

void put_noise_params(text::KeyValue& kv, const std::string& prefix, const NoiseParams& params) {
    kv.set(prefix + "enabled", params.enabled ? "true" : "false");
    kv.set(prefix + "flick_probability", params.flick_probability);
    kv.set(prefix + "max_flick", params.max_flick);
    kv.set(prefix + "seed", std::to_string(params.seed));
    kv.set(prefix + "hold_frames", std::to_string(params.hold_frames));
}

ScenarioFile parse_scenario(const text::KeyValue& kv, const std::string& base_dir) {
    ScenarioFile f;
    f.arena_ref = kv.get_or("arena", "forum");
    f.routes_path = kv.get_or("routes", "");
    f.entries_path = kv.get_or("entries", "");
    sfm::Scenario& s = f.scenario;
    s.arena = f.arena_ref == "forum" ? forum_arena() : load_arena(resolve(base_dir, f.arena_ref));
    if (!f.routes_path.empty()) s.routes = load_routes(resolve(base_dir, f.routes_path));
    if (!f.entries_path.empty()) s.entries = load_entries(resolve(base_dir, f.entries_path));
    s.seed = kv.get_u64_or("seed", s.seed);
    s.duration = kv.get_double_or("duration", s.duration);
    s.output_rate = kv.get_double_or("output_rate", s.output_rate);
    s.resample_entries = kv.get_bool_or("resample_entries", s.resample_entries);
    s.params = read_sfm_params(kv, "sfm.");
    if (!kv.with_prefix("noise.").empty()) f.noise = read_noise_params(kv, "noise.");
    s.validate();
    return f;
}

ScenarioFile load_scenario(const std::string& path) {
    const auto kv = text::KeyValue::load(path);
    return parse_scenario(kv, std::filesystem::path(path).parent_path().string());
}

void write_scenario(std::ostream& out, const ScenarioFile& f) {
    text::KeyValue kv;
    kv.set("arena", f.arena_ref);
    if (!f.routes_path.empty()) kv.set("routes", f.routes_path);
    if (!f.entries_path.empty()) kv.set("entries", f.entries_path);
    kv.set("seed", std::to_string(f.scenario.seed));
    kv.set("duration", f.scenario.duration);
    kv.set("output_rate", f.scenario.output_rate);
    kv.set("resample_entries", f.scenario.resample_entries ? "true" : "false");
    put_sfm_params(kv, "sfm.", f.scenario.params);
    if (f.noise) put_noise_params(kv, "noise.", *f.noise);
    kv.write(out);
}

}  // namespace crowdtt
