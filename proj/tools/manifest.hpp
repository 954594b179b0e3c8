#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gcnwp::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Enough to replay a run: the command line, the inputs by content hash and
/// every file the run wrote.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string config_path;
    std::string plan_path;
    std::vector<std::filesystem::path> inputs;
    std::uint64_t seed = 0;
    std::vector<std::filesystem::path> outputs;

    nlohmann::json to_json() const;
};

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

/// Writes run_manifest.json into `dir`.
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace gcnwp::cli
