#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace signdense::cli {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  // resolved options, in declaration order
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::pair<std::string, std::uint64_t>> inputs;  // path, FNV-1a of contents
  std::string timestamp;                                       // UTC, ISO 8601
};

// Digests a file, or every regular file of a directory in name order.
void add_input(RunManifest& m, const std::filesystem::path& path);
std::string utc_timestamp();
std::string to_json(const RunManifest& m);

}  // namespace signdense::cli
