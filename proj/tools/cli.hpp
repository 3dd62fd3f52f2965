#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace CLI {
class App;
class Option;
}

namespace fluoroforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitFatal = 2;

// Parsed command line; every subcommand binds into the same instance.
struct Options {
    std::uint64_t seed = 0;
    int workers = 1;
    bool offline = false;
    bool json_errors = false;

    std::string config;
    std::string out;
    std::string dataset;
    std::string id;
    std::string mask;
    std::string pred;
    std::string gt;
    double min_mask_frac = 0.025;
    std::string hdd_unit = "px";
    double hdd_percentile = 100.0;
    std::string embeddings;
    double lr = 0.05;
    int epochs = 300;
    bool json_output = false;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* percentile_opt = nullptr;
};

// The full command tree; options bind into `opts`.
std::unique_ptr<CLI::App> make_app(Options& opts);

// Runs one invocation. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace fluoroforge::cli
