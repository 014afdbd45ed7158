#include "manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>

#include "signdense/error.hpp"
#include "signdense/report.hpp"

namespace signdense::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::uint64_t digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

}  // namespace

void add_input(RunManifest& m, const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) m.inputs.emplace_back(f.string(), digest_file(f));
    return;
  }
  m.inputs.emplace_back(path.string(), digest_file(path));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_json(const RunManifest& m) {
  JsonWriter w;
  w.begin_object();
  w.key("command").value(m.command);
  w.key("config").begin_object();
  for (const auto& [k, v] : m.config) w.key(k).value(v);
  w.end_object();
  w.key("seed").value(m.seed);
  w.key("version").value(m.version);
  w.key("inputs").begin_array();
  for (const auto& [path, digest] : m.inputs) {
    w.begin_object();
    w.key("path").value(path);
    w.key("fnv1a64").value(hex64(digest));
    w.end_object();
  }
  w.end_array();
  w.key("timestamp").value(m.timestamp);
  w.end_object();
  return w.str() + "\n";
}

}  // namespace signdense::cli
