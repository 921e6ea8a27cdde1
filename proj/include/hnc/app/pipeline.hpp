#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnc/app/config.hpp"

namespace hnc::app {

// Bad or missing input data (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOutput {
  nlohmann::json options;                     // fully resolved, replayable
  std::string stdout_text;                    // printed by the CLI
  std::vector<std::filesystem::path> files;   // written artifacts
};

// Every subcommand as a function of its resolved options. `options` keys
// mirror the long flag names with dashes replaced by underscores; "data",
// "config" and "threads" are shared by all commands.
RunOutput run_command(const std::string& command, const nlohmann::json& options);
std::vector<std::string> command_names();

// 64-bit FNV-1a of a file's bytes (or of every file below a directory, in
// path order, including relative names), as 16 hex digits.
std::string digest(const std::filesystem::path& path);
std::string digest_text(const std::string& text);

// {command, options, config, versions, outputs:{path: digest}, stdout}
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& options, const RunOutput& out);
std::filesystem::path default_manifest_path(const std::string& command, const nlohmann::json& options);

struct RerunReport {
  bool identical = true;
  std::vector<std::string> mismatches;
  RunOutput output;
};
RerunReport rerun(const nlohmann::json& manifest);

inline constexpr const char* kVersion = "0.4.0";
inline constexpr int kFormatVersion = 1;

}  // namespace hnc::app
