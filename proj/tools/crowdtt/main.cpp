#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "context.hpp"
#include "crowdtt/error.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd realism trial harness: ingest, simulate, render, score"};
    app.set_version_flag("--version", "crowdtt 0.1.0");
    app.require_subcommand(1);
    const std::vector<std::string> args(argv + 1, argv + argc);
    crowdtt::cli::register_commands(app, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (e.get_exit_code() != 0) std::cerr << app.help();
        return kUsageError;
    } catch (const crowdtt::cli::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const crowdtt::ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const crowdtt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return 0;
}
