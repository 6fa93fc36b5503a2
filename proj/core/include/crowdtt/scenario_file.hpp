#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "crowdtt/noise.hpp"
#include "crowdtt/sfm.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt {

// Scenario file, `key = value` lines (INI sections allowed):
//   arena = forum            (or a path to an arena file)
//   routes = routes.csv      (optional)
//   entries = entries.csv    (optional)
//   seed, duration, output_rate, resample_entries
//   sfm.<field>, sfm.solver.<field>, noise.<field>
// Relative paths resolve against the scenario file's directory.
struct ScenarioFile {
    std::string arena_ref = "forum";
    std::string routes_path;
    std::string entries_path;
    sfm::Scenario scenario;
    std::optional<NoiseParams> noise;
};

// Reads SfmParams fields under `prefix` (e.g. "sfm."), starting from `base`.
sfm::SfmParams read_sfm_params(const text::KeyValue& kv, const std::string& prefix, sfm::SfmParams base = {});
void put_sfm_params(text::KeyValue& kv, const std::string& prefix, const sfm::SfmParams& params);

NoiseParams read_noise_params(const text::KeyValue& kv, const std::string& prefix, NoiseParams base = {});
void put_noise_params(text::KeyValue& kv, const std::string& prefix, const NoiseParams& params);

// `base_dir` resolves relative paths; referenced files are loaded.
ScenarioFile parse_scenario(const text::KeyValue& kv, const std::string& base_dir);
ScenarioFile load_scenario(const std::string& path);

// Writes every field; values are printed in shortest round-trip form so a
// written file reads back to identical values and rewrites byte-identically.
void write_scenario(std::ostream& out, const ScenarioFile& file);

}  // namespace crowdtt
