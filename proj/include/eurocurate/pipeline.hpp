#pragma once

// Config-driven pipeline stages shared by the CLI and the end-to-end tests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eurocurate/corpus_model.hpp"

namespace eurocurate {

/// A parsed config file. Relative paths resolve against base_dir.
struct PipelineConfig {
    Json tree = Json::object();
    std::filesystem::path base_dir = ".";
};

/// Throws ConfigError when the file is unreadable or not a JSON object.
PipelineConfig load_config(const std::filesystem::path& path);

/// Aggregated violations, each named `section.key` (plan rules as
/// `plan.<rule>`). Empty for a valid config.
std::vector<std::string> validate_config(const PipelineConfig& config);

struct StageOptions {
    std::optional<std::filesystem::path> input;
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> manifest_out;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    /// `arch` and `schedule` only.
    std::optional<std::string> preset;
    std::optional<std::int64_t> stride;
};

enum ExitCode : int { kExitOk = 0, kExitDataError = 1, kExitConfigError = 2 };

struct StageResult {
    int exit_code = kExitOk;
    Manifest manifest;
    std::string message;
    /// Text for standard output (tables printed by `arch` and `schedule`).
    std::string printed;
};

const std::vector<std::string>& stage_names();

/// Runs one stage end to end: reads its inputs, writes outputs and the
/// manifest atomically. Never throws; failures map to exit codes.
StageResult run_stage(const std::string& name, const PipelineConfig& config, const StageOptions& options);

}  // namespace eurocurate
