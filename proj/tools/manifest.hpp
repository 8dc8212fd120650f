#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace wdro::cli {

/// Lowercase hex SHA-256 of a file's bytes. Throws Io when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
    std::string role;
    std::string path;  // absolute
    std::string sha256;
};

/// Everything needed to re-run a command and check its outputs.
struct RunManifest {
    std::string tool = "wdro";
    std::string version;
    std::string command;
    std::vector<std::string> args;  // argv without the program name, paths made absolute
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string started_at;  // UTC, ISO 8601
    double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace wdro::cli
