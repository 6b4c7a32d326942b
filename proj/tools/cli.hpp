#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fbh::cli {

enum ExitCode : int { ok = 0, config_error = 1, numerical_failure = 2, hypothesis_violation = 3 };

/// Malformed or out-of-range configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    /// Overrides the config's "output" entry when set.
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

/// Runs the command named by config["command"] and writes report.json, CSV
/// artifacts and meta.json into the output directory. Diagnostics go to
/// `err`, a one-line summary to `log` unless quiet.
int run(const nlohmann::json& config, const Options& options, std::ostream& log, std::ostream& err);

/// Command-line entry: --config <path> [--out <dir>] [--seed <u64>] [--quiet].
int main(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace fbh::cli
