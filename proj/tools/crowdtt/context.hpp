#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "crowdtt/geometry.hpp"
#include "crowdtt/noise.hpp"
#include "crowdtt/render.hpp"
#include "crowdtt/sfm.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt::cli {

using Stamps = std::vector<std::pair<std::string, std::string>>;

// Flags shared by every subcommand.
struct CommonFlags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags);

// Effective settings for one subcommand: the config file's values with
// command-line flags taking precedence.
class Context {
public:
    Context(std::string command, const CommonFlags& flags, std::vector<std::string> argv);

    const text::KeyValue& config() const { return config_; }

    std::string get(const CLI::Option* opt, const std::string& flag, const std::string& key,
                    const std::string& fallback) const;
    double get(const CLI::Option* opt, double flag, const std::string& key, double fallback) const;
    long long get(const CLI::Option* opt, long long flag, const std::string& key, long long fallback) const;
    bool get(const CLI::Option* opt, bool flag, const std::string& key, bool fallback) const;

    // --seed, else `<section>.seed`, else `fallback`. Recorded in stamps.
    std::uint64_t seed(const std::string& section, std::uint64_t fallback);
    // --out, else `<key>`; throws a usage error when neither is set.
    std::string out(const std::string& key = "") const;
    std::optional<std::string> maybe_out(const std::string& key = "") const;

    ArenaGeometry arena(const CLI::Option* opt, const std::string& flag) const;
    sfm::SfmParams sfm_params(sfm::SfmParams base = {}) const;
    NoiseParams noise_params(NoiseParams base = {}) const;
    render::RenderStyle render_style() const;

    // Provenance lines for every artifact: command, config hash, seeds.
    Stamps stamps() const;
    void note_seed(const std::string& name, std::uint64_t value);

private:
    std::string command_;
    CommonFlags flags_;
    text::KeyValue config_;
    std::string hash_;
    Stamps seeds_;
};

// Usage-level failure (exit status 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace crowdtt::cli
