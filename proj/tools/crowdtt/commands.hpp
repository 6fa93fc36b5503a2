#pragma once

#include <string>
#include <vector>

#include "CLI11.hpp"

namespace crowdtt::cli {

// Adds every pipeline subcommand to `app`. `argv` (without the program
// name) feeds the config hash stamped into artifacts.
void register_commands(CLI::App& app, const std::vector<std::string>& argv);

}  // namespace crowdtt::cli
